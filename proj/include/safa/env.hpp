#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "safa/rng.hpp"

namespace safa {

// One simulated device's static characteristics.
struct ClientProfile {
    double perf = 1.0;        // batches per second
    double crash_prob = 0.0;  // per-round, i.i.d.
    double bandwidth = 1.4e6; // bits per second
    size_t partition_size = 1;
};

struct TimingConfig {
    double model_size_bits = 8e7;       // 10 MB = 10e6 bytes
    double client_bw = 1.4e6;           // 1.40 Mb/s
    double server_bw = 1e10;            // 10 Gb/s
    double t_lim = 830.0;               // round time cap, seconds
    double per_model_dist_time = 0.404; // seconds per copy; <= 0 means use server_bw
    // true: cap applies to waiting only, T = T_dist + min(T_lim, wait)
    // false: cap applies to the whole round, T = min(T_lim, T_dist + wait)
    bool cap_excludes_dist = true;
};

struct PopulationConfig {
    double perf_lambda = 1.0;     // exponential rate for performance draws
    double perf_base = 1.0;       // scale applied to each draw
    double perf_floor_frac = 0.05;// redraw below floor_frac * perf_base
    double crash_prob = 0.0;
};

// i.i.d. Exponential(lambda) performance scaled by perf_base, redrawn while
// under the floor; identical crash probability for every client.
std::vector<ClientProfile> sample_population(int m, const PopulationConfig& cfg,
                                             const std::vector<size_t>& partition_sizes,
                                             uint64_t seed);

struct CrashDraw {
    bool crashed = false;
    double time_fraction = 0.0;  // fraction of the training interval completed, [0,1)
};

// Independent per (seed, round, client); crashed clients get a uniform
// crash-time fraction for futility accounting.
std::vector<CrashDraw> sample_crashes(const std::vector<ClientProfile>& profiles, int round,
                                      uint64_t seed);

// |B_k| * E / s_k with |B_k| = ceil(n_k / B)
double t_train(const ClientProfile& profile, int epochs, int batch_size);

struct UpDownTime {
    double down = 0.0;
    double up = 0.0;
};

UpDownTime t_updown(const ClientProfile& profile, const TimingConfig& cfg);

// m_sync copies at per_model_dist_time each (or model_size/server_bw)
double t_dist(int m_sync, const TimingConfig& cfg);

// Round length from the per-client totals the server actually waits on;
// infinity marks a client that will never respond. Empty set -> T_dist.
double round_length(const std::vector<double>& waited_on_times, double T_dist,
                    const TimingConfig& cfg);

}  // namespace safa
