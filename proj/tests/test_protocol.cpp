#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "safa/config.hpp"
#include "safa/errors.hpp"
#include "safa/protocol.hpp"
#include "safa/rng.hpp"

using namespace safa;

namespace {

SimConfig small_sim_config(Protocol proto, int m, double C, double cr, int tau,
                           uint64_t seed = 1) {
    SimConfig c;
    c.protocol = proto;
    c.m = m;
    c.rounds = 10;
    c.selection_fraction = C;
    c.lag_tolerance = tau;
    c.learner = LearnerSpec{ModelKind::LinearRegression, 1e-3, 1, 8};
    c.population.crash_prob = cr;
    c.timing.t_lim = 1e6;  // keep slow clients inside the cap
    c.master_seed = seed;
    return c;
}

}  // namespace

TEST_CASE("version classification follows the lag-tolerant rule") {
    // t=10, tau=2: v=9 up-to-date, v=8 tolerable, v=7 deprecated
    auto cls = classify_clients({9, 8, 7}, 10, 2);
    CHECK(cls[0] == SyncClass::UpToDate);
    CHECK(cls[1] == SyncClass::Tolerable);
    CHECK(cls[2] == SyncClass::Deprecated);

    // a client that missed two consecutive rounds under tau=2 is deprecated
    CHECK(classify_clients({7}, 10, 2)[0] == SyncClass::Deprecated);
    // tau=5 keeps v = t-3 tolerable
    CHECK(classify_clients({7}, 10, 5)[0] == SyncClass::Tolerable);

    CHECK_THROWS_AS(classify_clients({10}, 10, 2), InternalError);
}

TEST_CASE("classification is exhaustive and exclusive") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        int t = 1 + static_cast<int>(rng.below(50));
        int tau = 1 + static_cast<int>(rng.below(10));
        int v = t - 1 - static_cast<int>(rng.below(20));
        auto c = classify_clients({v}, t, tau)[0];
        if (v == t - 1) CHECK(c == SyncClass::UpToDate);
        else if (v >= t - tau) CHECK(c == SyncClass::Tolerable);
        else CHECK(c == SyncClass::Deprecated);
    }
}

TEST_CASE("distribution syncs everyone under tau=1 and spares tolerable clients") {
    ServerState server;
    server.global_model = ModelParams({1.0, 2.0}, 4);
    std::vector<ClientState> clients(3);
    for (int k = 0; k < 3; ++k) {
        clients[k].id = k;
        clients[k].model = ModelParams({0.5 * k, 0.5}, 4 - k);  // versions 4,3,2
    }

    // tau=1 at t=5: no version satisfies t-tau <= v < t-1
    auto all_sync = classify_clients({4, 3, 2}, 5, 1);
    std::vector<ClientState> copy = clients;
    CHECK(distribute(server, copy, all_sync) == 3);

    // tau=5: clients 1 and 2 are tolerable, weights bit-identical after
    auto classes = classify_clients({4, 3, 2}, 5, 5);
    std::vector<double> before1 = clients[1].model.weights;
    int m_sync = distribute(server, clients, classes);
    CHECK(m_sync == 1);
    CHECK(clients[0].model.weights == server.global_model.weights);
    CHECK(clients[1].model.weights == before1);
}

TEST_CASE("cfcfm: compensation first, then arrival order") {
    // quota = 2; A was picked last round, B and C were not
    std::vector<Arrival> arrivals = {{0, 1.0}, {1, 2.0}, {2, 3.0}};
    auto res = cfcfm_select(arrivals, {0}, 0.5, 4, 100.0);
    CHECK(res.picked == std::vector<int>{1, 2});
    CHECK(res.undrafted == std::vector<int>{0});
    CHECK(res.close_time == doctest::Approx(3.0));
}

TEST_CASE("cfcfm: quota covering all arrivals picks everyone") {
    std::vector<Arrival> arrivals = {{2, 1.0}, {0, 2.0}};
    auto res = cfcfm_select(arrivals, {0, 2}, 1.0, 2, 100.0);
    CHECK(res.picked == std::vector<int>{0, 2});
    CHECK(res.undrafted.empty());
}

TEST_CASE("cfcfm: shortfall filled from the non-priority queue by arrival") {
    // quota = 1, both arrivals picked last round -> Q fill takes the earliest
    std::vector<Arrival> arrivals = {{3, 1.0}, {5, 2.0}};
    auto res = cfcfm_select(arrivals, {3, 5}, 0.25, 4, 100.0);
    CHECK(res.picked == std::vector<int>{3});
    CHECK(res.undrafted == std::vector<int>{5});
}

TEST_CASE("cfcfm: empty arrivals give empty sets") {
    auto res = cfcfm_select({}, {}, 0.5, 4, 100.0);
    CHECK(res.picked.empty());
    CHECK(res.undrafted.empty());
}

TEST_CASE("cfcfm properties: quota bound, partition, compensation priority") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        int m = 2 + static_cast<int>(rng.below(20));
        double C = rng.uniform(0.05, 1.0);
        size_t quota = static_cast<size_t>(std::ceil(C * m));

        std::vector<Arrival> arrivals;
        std::set<int> picked_last;
        double t = 0.0;
        for (int k = 0; k < m; ++k) {
            if (rng.uniform() < 0.3) continue;  // crashed
            t += rng.uniform(0.01, 1.0);
            arrivals.push_back({k, t});
            if (rng.uniform() < 0.5) picked_last.insert(k);
        }
        auto res = cfcfm_select(arrivals, picked_last, C, m, 1e9);

        CHECK(res.picked.size() <= quota);
        if (arrivals.size() >= quota) CHECK(res.picked.size() == quota);

        // picked and undrafted partition the arrivals
        std::set<int> all;
        for (const auto& a : arrivals) all.insert(a.client_id);
        std::set<int> got;
        for (int k : res.picked) CHECK(got.insert(k).second);
        for (int k : res.undrafted) CHECK(got.insert(k).second);
        CHECK(got == all);

        // if any non-priority client is picked, every priority arrival is too
        bool non_priority_picked = false;
        for (int k : res.picked)
            if (picked_last.count(k)) non_priority_picked = true;
        if (non_priority_picked) {
            for (const auto& a : arrivals)
                if (picked_last.count(a.client_id) == 0)
                    CHECK(std::count(res.picked.begin(), res.picked.end(), a.client_id) == 1);
        }
    }
}

TEST_CASE("pre-aggregation cache update") {
    ServerState server;
    server.global_model = ModelParams({9.0}, 2);
    server.cache = {ModelParams({1.0}, 0), ModelParams({2.0}, 0), ModelParams({3.0}, 0)};
    auto snapshot = server.cache;

    SUBCASE("no picks and no deprecations leave the cache alone") {
        pre_aggregation_cache_update(server, {}, {}, {});
        for (int k = 0; k < 3; ++k) CHECK(server.cache[k].weights == snapshot[k].weights);
    }
    SUBCASE("picked entry takes the committed weights exactly") {
        std::map<int, ModelParams> trained;
        trained.emplace(1, ModelParams({7.5}, 3));
        pre_aggregation_cache_update(server, {1}, trained, {});
        CHECK(server.cache[1].weights == std::vector<double>{7.5});
        CHECK(server.cache[0].weights == snapshot[0].weights);
    }
    SUBCASE("deprecated crashed entry takes the global model exactly") {
        pre_aggregation_cache_update(server, {}, {}, {2});
        CHECK(server.cache[2].weights == server.global_model.weights);
    }
    SUBCASE("picked and deprecated at once is an internal inconsistency") {
        std::map<int, ModelParams> trained;
        trained.emplace(1, ModelParams({7.5}, 3));
        CHECK_THROWS_AS(pre_aggregation_cache_update(server, {1}, trained, {1}),
                        InternalError);
    }
}

TEST_CASE("aggregation is the n_k-weighted cache average") {
    // scalar model, n = (1,3), entries (0,4) -> 3.0
    std::vector<ModelParams> cache = {ModelParams({0.0}, 0), ModelParams({4.0}, 0)};
    ModelParams w = aggregate(cache, {1, 3}, 7);
    CHECK(w.weights[0] == doctest::Approx(3.0));
    CHECK(w.version == 7);

    // constant cache is a fixed point
    std::vector<ModelParams> same(5, ModelParams({1.25, -2.0}, 0));
    ModelParams fixed = aggregate(same, {3, 1, 4, 1, 5}, 1);
    CHECK(fixed.weights[0] == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(fixed.weights[1] == doctest::Approx(-2.0).epsilon(1e-12));

    // permutation invariance
    Rng rng(3);
    std::vector<ModelParams> entries;
    std::vector<size_t> sizes;
    for (int k = 0; k < 6; ++k) {
        entries.push_back(ModelParams({rng.normal(0, 1), rng.normal(0, 1)}, 0));
        sizes.push_back(1 + rng.below(9));
    }
    ModelParams base = aggregate(entries, sizes, 1);
    std::vector<size_t> perm = {5, 3, 0, 1, 4, 2};
    std::vector<ModelParams> pe;
    std::vector<size_t> ps;
    for (size_t i : perm) {
        pe.push_back(entries[i]);
        ps.push_back(sizes[i]);
    }
    ModelParams permuted = aggregate(pe, ps, 1);
    for (size_t j = 0; j < 2; ++j)
        CHECK(permuted.weights[j] == doctest::Approx(base.weights[j]).epsilon(1e-12));

    std::vector<ModelParams> bad = {ModelParams({std::nan("")}, 0)};
    CHECK_THROWS_AS(aggregate(bad, {1}, 1), NumericDivergence);
}

TEST_CASE("post-aggregation moves bypass entries into the cache and clears it") {
    ServerState server;
    server.cache = {ModelParams({1.0}, 0), ModelParams({2.0}, 0)};
    server.bypass.emplace(1, ModelParams({5.0}, 3));
    post_aggregation_cache_update(server, {1});
    CHECK(server.cache[1].weights == std::vector<double>{5.0});
    CHECK(server.cache[0].weights == std::vector<double>{1.0});
    CHECK(server.bypass.empty());

    // empty undrafted set: cache unchanged, bypass still cleared
    server.bypass.emplace(0, ModelParams({8.0}, 3));
    auto snapshot = server.cache;
    post_aggregation_cache_update(server, {});
    CHECK(server.cache[0].weights == snapshot[0].weights);
    CHECK(server.bypass.empty());
}

TEST_CASE("fig-2 scenario: a client crashing two rounds under tau=2 is resynced") {
    Dataset ds = make_synthetic_regression(64, 3, 11);
    SimConfig cfg = small_sim_config(Protocol::Safa, 4, 0.5, 0.0, 2, 11);
    Simulation sim(ds, cfg);
    sim.mutable_profiles()[3].crash_prob = 1.0;  // client D

    sim.run_round();
    sim.run_round();
    CHECK(sim.clients()[3].model.version == 0);  // still on its initial model

    sim.mutable_profiles()[3].crash_prob = 0.0;
    ModelParams g2 = sim.global_model();  // w(2), distributed at round-3 start
    RoundReport rep = sim.run_round();

    CHECK(rep.deprecated == 1);
    CHECK(sim.clients()[3].sync_class == SyncClass::Deprecated);
    // D received G2 before training: its commit this round is stamped t=3
    CHECK(sim.clients()[3].model.version == 3);
    CHECK(rep.round == 3);
    (void)g2;
}

TEST_CASE("single client with no crashes reduces to centralized SGD") {
    Dataset ds = make_synthetic_regression(40, 3, 21);
    SimConfig cfg = small_sim_config(Protocol::Safa, 1, 1.0, 0.0, 1, 21);
    Simulation sim(ds, cfg);

    ModelParams manual = sim.global_model();
    for (int t = 1; t <= 5; ++t) {
        sim.run_round();
        uint64_t seed = derive_seed(cfg.master_seed, "train", static_cast<uint64_t>(t),
                                    static_cast<uint64_t>(0));
        manual = client_update(0, manual, sim.partitions()[0], ds, cfg.learner, seed, t);
        CHECK(sim.global_model().weights == manual.weights);
    }
}

TEST_CASE("equivalence oracle: safa, fedavg and fedcs coincide without crashes") {
    Dataset ds = make_synthetic_regression(60, 4, 33);
    std::vector<std::vector<double>> trajectories;
    for (Protocol p : {Protocol::Safa, Protocol::FedAvg, Protocol::FedCs}) {
        SimConfig cfg = small_sim_config(p, 4, 1.0, 0.0, 1, 33);
        Simulation sim(ds, cfg);
        std::vector<double> flat;
        for (int t = 0; t < 8; ++t) {
            sim.run_round();
            for (double w : sim.global_model().weights) flat.push_back(w);
        }
        trajectories.push_back(std::move(flat));
    }
    CHECK(trajectories[0] == trajectories[1]);  // bitwise
    CHECK(trajectories[0] == trajectories[2]);
}

TEST_CASE("safa round invariants over a crashy run") {
    Dataset ds = make_synthetic_regression(120, 3, 55);
    SimConfig cfg = small_sim_config(Protocol::Safa, 12, 0.4, 0.35, 3, 55);
    cfg.rounds = 25;
    Simulation sim(ds, cfg);
    const size_t quota =
        static_cast<size_t>(std::ceil(cfg.selection_fraction * cfg.m));

    for (int t = 1; t <= cfg.rounds; ++t) {
        auto cache_before = sim.server().cache;
        ModelParams global_before = sim.global_model();
        RoundReport rep = sim.run_round();

        // round-outcome partition over all clients that ran
        int picked = 0, undrafted = 0, crashed = 0;
        for (const auto& c : sim.clients()) {
            switch (c.outcome) {
                case RoundOutcome::Picked: ++picked; break;
                case RoundOutcome::Undrafted: ++undrafted; break;
                case RoundOutcome::Crashed: ++crashed; break;
                case RoundOutcome::NotRun: FAIL("every safa client runs"); break;
            }
        }
        CHECK(picked == rep.picked);
        CHECK(undrafted == rep.undrafted);
        CHECK(crashed == rep.crashed);
        CHECK(picked + undrafted + crashed == cfg.m);

        CHECK(rep.picked <= static_cast<int>(quota));
        if (cfg.m - crashed >= static_cast<int>(quota))
            CHECK(rep.picked == static_cast<int>(quota));

        // cache conservation: every entry is a committed model, the round's
        // starting global model, or the previous entry
        for (int k = 0; k < cfg.m; ++k) {
            const auto& entry = sim.server().cache[k].weights;
            bool ok = entry == cache_before[k].weights ||
                      entry == global_before.weights ||
                      entry == sim.clients()[k].model.weights;
            CHECK(ok);
        }

        CHECK(rep.round_length >= rep.t_dist);
        CHECK(sim.global_model().version == t);
    }
}

TEST_CASE("fedavg stalls at the cap whenever a selected client crashes") {
    Dataset ds = make_synthetic_regression(80, 3, 66);
    SimConfig cfg = small_sim_config(Protocol::FedAvg, 8, 0.5, 0.0, 1, 66);
    cfg.timing.t_lim = 500.0;
    Simulation sim(ds, cfg);

    // cr = 0: round length is t_dist + the slowest selected participant
    RoundReport rep = sim.run_round();
    CHECK(rep.crashed == 0);
    CHECK(rep.round_length < cfg.timing.t_lim + rep.t_dist);

    // force a crash: the single selected victim stalls the round to the cap
    for (auto& p : sim.mutable_profiles()) p.crash_prob = 1.0;
    rep = sim.run_round();
    CHECK(rep.picked == 0);
    CHECK(rep.round_length == doctest::Approx(cfg.timing.t_lim + rep.t_dist));
}

TEST_CASE("fedavg discards pre-round progress of crashed clients as futility") {
    Dataset ds = make_synthetic_regression(80, 3, 13);
    SimConfig cfg = small_sim_config(Protocol::FedAvg, 10, 1.0, 0.5, 1, 13);
    cfg.rounds = 40;
    Simulation sim(ds, cfg);
    sim.run_all();
    double fut = sim.total_wasted_epochs() / sim.total_attempted_epochs();
    CHECK(fut == doctest::Approx(0.25).epsilon(0.35));  // cr/2 with sampling noise
}

TEST_CASE("fedcs picks the fastest clients and never beats fedavg on speed") {
    Dataset ds = make_synthetic_regression(90, 3, 44);
    SimConfig avg_cfg = small_sim_config(Protocol::FedAvg, 9, 0.4, 0.0, 1, 44);
    SimConfig cs_cfg = avg_cfg;
    cs_cfg.protocol = Protocol::FedCs;
    Simulation fedavg(ds, avg_cfg);
    Simulation fedcs(ds, cs_cfg);
    for (int t = 0; t < 6; ++t) {
        double la = fedavg.run_round().round_length;
        double lc = fedcs.run_round().round_length;
        CHECK(lc <= la + 1e-9);
    }
}

TEST_CASE("fully local: single client equals centralized, full crash freezes init") {
    Dataset ds = make_synthetic_regression(30, 3, 72);

    SimConfig solo = small_sim_config(Protocol::FullyLocal, 1, 1.0, 0.0, 1, 72);
    Simulation sim(ds, solo);
    ModelParams manual = sim.reported_model();
    for (int t = 1; t <= 3; ++t) {
        sim.run_round();
        uint64_t seed = derive_seed(solo.master_seed, "train", static_cast<uint64_t>(t),
                                    static_cast<uint64_t>(0));
        manual = client_update(0, manual, sim.partitions()[0], ds, solo.learner, seed, t);
        CHECK(sim.reported_model().weights == manual.weights);
    }

    SimConfig frozen = small_sim_config(Protocol::FullyLocal, 4, 1.0, 1.0, 1, 72);
    Simulation dead(ds, frozen);
    ModelParams init = dead.reported_model();
    dead.run_all();
    for (size_t j = 0; j < init.dim(); ++j)
        CHECK(dead.reported_model().weights[j] == doctest::Approx(init.weights[j]));
}

TEST_CASE("identical config and seed give bitwise-identical report streams") {
    Dataset ds = make_synthetic_regression(60, 3, 88);
    for (Protocol p :
         {Protocol::Safa, Protocol::FedAvg, Protocol::FedCs, Protocol::FullyLocal}) {
        SimConfig cfg = small_sim_config(p, 6, 0.5, 0.3, 2, 88);
        cfg.rounds = 6;
        Simulation a(ds, cfg), b(ds, cfg);
        for (int t = 0; t < cfg.rounds; ++t) {
            RoundReport ra = a.run_round();
            RoundReport rb = b.run_round();
            CHECK(ra.round_length == rb.round_length);
            CHECK(ra.loss == rb.loss);
            CHECK(ra.accuracy == rb.accuracy);
            CHECK(ra.picked == rb.picked);
            CHECK(ra.crashed == rb.crashed);
            CHECK(ra.m_sync == rb.m_sync);
        }
        CHECK(a.global_model().weights == b.global_model().weights);
    }
}

TEST_CASE("undrafted updates reach the next round's aggregation via the bypass") {
    // two clients, quota 1: the undrafted client's cache entry must equal its
    // committed model when the next round aggregates
    Dataset ds = make_synthetic_regression(40, 2, 14);
    SimConfig cfg = small_sim_config(Protocol::Safa, 2, 0.5, 0.0, 3, 14);
    Simulation sim(ds, cfg);
    sim.run_round();
    int undrafted = -1;
    for (const auto& c : sim.clients())
        if (c.outcome == RoundOutcome::Undrafted) undrafted = c.id;
    REQUIRE(undrafted >= 0);
    CHECK(sim.server().cache[undrafted].weights == sim.clients()[undrafted].model.weights);
    CHECK(sim.server().bypass.empty());
}
