#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "safa/errors.hpp"

namespace safa {

// Flat parameter vector with a version stamp; the unit exchanged between
// server and clients.
struct ModelParams {
    std::vector<double> weights;
    int version = 0;

    ModelParams() = default;
    ModelParams(std::vector<double> w, int v) : weights(std::move(w)), version(v) {}

    static ModelParams zeros(size_t dim, int version = 0) {
        return ModelParams(std::vector<double>(dim, 0.0), version);
    }

    size_t dim() const { return weights.size(); }

    bool all_finite() const {
        for (double w : weights)
            if (!std::isfinite(w)) return false;
        return true;
    }
};

inline void require_finite(const ModelParams& m, const std::string& where) {
    if (!m.all_finite()) throw NumericDivergence("non-finite weights in " + where);
}

}  // namespace safa
