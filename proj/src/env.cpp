#include "safa/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "safa/errors.hpp"

namespace safa {

std::vector<ClientProfile> sample_population(int m, const PopulationConfig& cfg,
                                             const std::vector<size_t>& partition_sizes,
                                             uint64_t seed) {
    if (m < 1) throw ConfigError("population size must be >= 1");
    if (partition_sizes.size() != static_cast<size_t>(m))
        throw ConfigError("partition_sizes length must equal m");

    std::vector<ClientProfile> out(m);
    const double floor = cfg.perf_floor_frac * cfg.perf_base;
    for (int k = 0; k < m; ++k) {
        Rng rng(derive_seed(seed, "population", static_cast<uint64_t>(k)));
        double s;
        do {
            s = cfg.perf_base * rng.exponential(cfg.perf_lambda);
        } while (s < floor);
        out[k].perf = s;
        out[k].crash_prob = cfg.crash_prob;
        out[k].partition_size = partition_sizes[k];
    }
    return out;
}

std::vector<CrashDraw> sample_crashes(const std::vector<ClientProfile>& profiles, int round,
                                      uint64_t seed) {
    std::vector<CrashDraw> out(profiles.size());
    for (size_t k = 0; k < profiles.size(); ++k) {
        Rng rng(derive_seed(seed, "crash", static_cast<uint64_t>(round), k));
        double u = rng.uniform();
        if (u < profiles[k].crash_prob) {
            out[k].crashed = true;
            out[k].time_fraction = rng.uniform();
        }
    }
    return out;
}

double t_train(const ClientProfile& profile, int epochs, int batch_size) {
    if (profile.perf <= 0) throw InternalError("client performance must be positive");
    double batches = std::ceil(static_cast<double>(profile.partition_size) / batch_size);
    return batches * epochs / profile.perf;
}

UpDownTime t_updown(const ClientProfile& profile, const TimingConfig& cfg) {
    if (profile.bandwidth <= 0) throw ConfigError("client bandwidth must be positive");
    double t = std::isinf(profile.bandwidth) ? 0.0 : cfg.model_size_bits / profile.bandwidth;
    return {t, t};
}

double t_dist(int m_sync, const TimingConfig& cfg) {
    if (m_sync < 0) throw InternalError("m_sync must be >= 0");
    double per_model = cfg.per_model_dist_time > 0 ? cfg.per_model_dist_time
                                                   : cfg.model_size_bits / cfg.server_bw;
    return m_sync * per_model;
}

double round_length(const std::vector<double>& waited_on_times, double T_dist,
                    const TimingConfig& cfg) {
    if (waited_on_times.empty()) return T_dist;
    double wait = 0.0;
    for (double t : waited_on_times) wait = std::max(wait, t);
    if (cfg.cap_excludes_dist) return T_dist + std::min(cfg.t_lim, wait);
    return std::min(cfg.t_lim, T_dist + wait);
}

}  // namespace safa
