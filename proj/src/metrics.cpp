#include "safa/metrics.hpp"

#include <algorithm>

#include "safa/errors.hpp"

namespace safa {

double eur_empirical(const std::set<int>& picked, const std::set<int>& crashed, int m) {
    if (m < 1) throw ConfigError("eur_empirical: m must be >= 1");
    int effective = 0;
    for (int k : picked)
        if (crashed.count(k) == 0) ++effective;
    return static_cast<double>(effective) / m;
}

double eur_theoretical(double C, double R) {
    if (C <= 0.0 || C > 1.0) throw ConfigError("eur_theoretical: C must be in (0,1]");
    if (R < 0.0 || R > 1.0) throw ConfigError("eur_theoretical: R must be in [0,1]");
    return C >= 1.0 - R ? 1.0 - R : C;
}

double sync_ratio(const std::vector<int>& per_round_m_sync, int m, int rounds) {
    if (rounds < 1) throw ConfigError("sync_ratio: rounds must be >= 1");
    if (per_round_m_sync.size() != static_cast<size_t>(rounds))
        throw ConfigError("sync_ratio: m_sync list length must equal rounds");
    long long total = 0;
    for (int v : per_round_m_sync) total += v;
    return static_cast<double>(total) / (static_cast<double>(rounds) * m);
}

double population_variance(const std::vector<int>& values) {
    if (values.empty()) throw ConfigError("population_variance: empty list");
    double mean = 0.0;
    for (int v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (int v : values) var += (v - mean) * (v - mean);
    return var / values.size();
}

double version_variance(const std::vector<std::vector<int>>& per_round_versions, int rounds) {
    if (rounds < 1) throw ConfigError("version_variance: rounds must be >= 1");
    if (per_round_versions.size() != static_cast<size_t>(rounds))
        throw ConfigError("version_variance: version list length must equal rounds");
    double total = 0.0;
    for (const auto& vs : per_round_versions) total += population_variance(vs);
    return total / rounds;
}

double futility(double epochs_wasted, double epochs_attempted) {
    if (epochs_attempted <= 0) throw ConfigError("futility: attempted epochs must be > 0");
    return epochs_wasted / epochs_attempted;
}

}  // namespace safa
