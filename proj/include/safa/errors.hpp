#pragma once

#include <stdexcept>
#include <string>

namespace safa {

// Invalid user-facing configuration or input. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training or aggregation produced NaN/Inf. CLI exit code 2.
class NumericDivergence : public std::runtime_error {
public:
    explicit NumericDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

// A protocol invariant was violated; always a bug, never user error.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

// The analytic bias trace left [0,1]; flagged, never silently clipped.
class AnalyticInconsistency : public std::runtime_error {
public:
    explicit AnalyticInconsistency(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace safa
