#include <doctest.h>

#include <cmath>
#include <limits>

#include "safa/env.hpp"
#include "safa/rng.hpp"

using namespace safa;

TEST_CASE("population draws follow the exponential with the configured floor") {
    PopulationConfig cfg;
    cfg.perf_lambda = 1.0;
    cfg.perf_base = 1.0;
    cfg.perf_floor_frac = 0.0;
    std::vector<size_t> sizes(5000, 1);
    auto pop = sample_population(5000, cfg, sizes, 31);
    double mean = 0.0;
    for (const auto& p : pop) mean += p.perf;
    mean /= pop.size();
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));

    cfg.perf_floor_frac = 0.05;
    auto floored = sample_population(5000, cfg, sizes, 31);
    for (const auto& p : floored) CHECK(p.perf >= 0.05);
}

TEST_CASE("population sampling is deterministic and scales to task-3 size") {
    PopulationConfig cfg;
    cfg.crash_prob = 0.3;
    std::vector<size_t> sizes(500, 10);
    auto a = sample_population(500, cfg, sizes, 9);
    auto b = sample_population(500, cfg, sizes, 9);
    CHECK(a.size() == 500);
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].perf == b[k].perf);
        CHECK(a[k].crash_prob == 0.3);
    }
}

TEST_CASE("crash sampling matches the configured rate") {
    PopulationConfig cfg;
    std::vector<size_t> sizes(100, 1);

    cfg.crash_prob = 0.0;
    auto quiet = sample_population(100, cfg, sizes, 1);
    for (int t = 1; t <= 20; ++t)
        for (const auto& c : sample_crashes(quiet, t, 5)) CHECK_FALSE(c.crashed);

    cfg.crash_prob = 1.0;
    auto doomed = sample_population(100, cfg, sizes, 1);
    for (const auto& c : sample_crashes(doomed, 1, 5)) CHECK(c.crashed);

    cfg.crash_prob = 0.3;
    auto pop = sample_population(100, cfg, sizes, 1);
    int crashes = 0;
    double frac_sum = 0.0;
    for (int t = 1; t <= 100; ++t) {
        for (const auto& c : sample_crashes(pop, t, 5)) {
            if (c.crashed) {
                ++crashes;
                frac_sum += c.time_fraction;
            }
        }
    }
    double rate = crashes / 10000.0;
    CHECK(rate == doctest::Approx(0.30).epsilon(0.1));
    CHECK(frac_sum / crashes == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("per-client crash rates stay within binomial bounds over a long run") {
    PopulationConfig cfg;
    cfg.crash_prob = 0.4;
    std::vector<size_t> sizes(20, 1);
    auto pop = sample_population(20, cfg, sizes, 2);
    const int R = 2000;
    std::vector<int> counts(20, 0);
    for (int t = 1; t <= R; ++t) {
        auto cs = sample_crashes(pop, t, 77);
        for (size_t k = 0; k < cs.size(); ++k)
            if (cs[k].crashed) ++counts[k];
    }
    double sigma = std::sqrt(0.4 * 0.6 / R);
    for (int c : counts) CHECK(std::abs(c / double(R) - 0.4) < 3 * sigma + 1e-9);
}

TEST_CASE("training time formula") {
    ClientProfile p;
    p.perf = 2.0;
    p.partition_size = 50;
    CHECK(t_train(p, 3, 5) == doctest::Approx(15.0));  // ceil(50/5)*3/2
    CHECK(t_train(p, 0, 5) == doctest::Approx(0.0));

    ClientProfile fast = p;
    fast.perf = 4.0;
    CHECK(t_train(fast, 3, 5) == doctest::Approx(t_train(p, 3, 5) / 2));
}

TEST_CASE("up/down link time from the paper's bandwidth setting") {
    ClientProfile p;
    p.bandwidth = 1.4e6;
    TimingConfig cfg;
    cfg.model_size_bits = 8e7;
    cfg.client_bw = 1.4e6;
    auto [down, up] = t_updown(p, cfg);
    CHECK(down == doctest::Approx(57.142857).epsilon(1e-6));
    CHECK(down == up);

    ClientProfile infinite = p;
    infinite.bandwidth = std::numeric_limits<double>::infinity();
    auto [d2, u2] = t_updown(infinite, cfg);
    CHECK(d2 == 0.0);
    CHECK(u2 == 0.0);
}

TEST_CASE("distribution overhead per model copy") {
    TimingConfig cfg;
    cfg.per_model_dist_time = 0.404;
    CHECK(t_dist(0, cfg) == 0.0);
    CHECK(t_dist(500, cfg) == doctest::Approx(202.0));

    // literal server-bandwidth form
    cfg.per_model_dist_time = 0.0;
    cfg.model_size_bits = 8e7;
    cfg.server_bw = 1e10;
    CHECK(t_dist(10, cfg) == doctest::Approx(0.08));
}

TEST_CASE("round length: cap, stall and empty set") {
    TimingConfig cfg;
    cfg.t_lim = 830.0;

    CHECK(round_length({}, 5.0, cfg) == doctest::Approx(5.0));
    CHECK(round_length({30.0, 50.0}, 2.0, cfg) == doctest::Approx(52.0));
    double inf = std::numeric_limits<double>::infinity();
    CHECK(round_length({30.0, inf}, 2.0, cfg) == doctest::Approx(832.0));

    // whole-round cap variant
    cfg.cap_excludes_dist = false;
    CHECK(round_length({30.0, inf}, 2.0, cfg) == doctest::Approx(830.0));
    CHECK(round_length({30.0, 50.0}, 2.0, cfg) == doctest::Approx(52.0));
}

TEST_CASE("round length is monotone in participant times and t_dist") {
    Rng rng(4);
    TimingConfig cfg;
    cfg.t_lim = 100.0;
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 1 + rng.below(6);
        std::vector<double> times(n);
        for (double& t : times) t = rng.uniform(0.0, 150.0);
        double dist = rng.uniform(0.0, 10.0);
        double base = round_length(times, dist, cfg);

        size_t j = rng.below(n);
        std::vector<double> bumped = times;
        bumped[j] += rng.uniform(0.0, 50.0);
        CHECK(round_length(bumped, dist, cfg) >= base);
        CHECK(round_length(times, dist + 1.0, cfg) >= base);
    }
}
