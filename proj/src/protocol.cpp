#include "safa/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "safa/errors.hpp"
#include "safa/metrics.hpp"

namespace safa {

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::Safa: return "safa";
        case Protocol::FedAvg: return "fedavg";
        case Protocol::FedCs: return "fedcs";
        case Protocol::FullyLocal: return "local";
    }
    return "?";
}

Protocol protocol_from_string(const std::string& s) {
    if (s == "safa") return Protocol::Safa;
    if (s == "fedavg") return Protocol::FedAvg;
    if (s == "fedcs") return Protocol::FedCs;
    if (s == "local") return Protocol::FullyLocal;
    throw ConfigError("unknown protocol: " + s + " (expected safa|fedavg|fedcs|local)");
}

std::vector<SyncClass> classify_clients(const std::vector<int>& client_versions, int t, int tau) {
    if (t < 1) throw InternalError("classify_clients: round must be >= 1");
    if (tau < 1) throw ConfigError("lag tolerance must be >= 1");
    std::vector<SyncClass> out(client_versions.size());
    for (size_t k = 0; k < client_versions.size(); ++k) {
        int v = client_versions[k];
        if (v >= t)
            throw InternalError("client " + std::to_string(k) + " has version " +
                                std::to_string(v) + " >= round " + std::to_string(t));
        if (v == t - 1)
            out[k] = SyncClass::UpToDate;
        else if (v >= t - tau)
            out[k] = SyncClass::Tolerable;
        else
            out[k] = SyncClass::Deprecated;
    }
    return out;
}

int distribute(const ServerState& server, std::vector<ClientState>& clients,
               const std::vector<SyncClass>& classes) {
    int m_sync = 0;
    for (size_t k = 0; k < clients.size(); ++k) {
        clients[k].sync_class = classes[k];
        if (classes[k] == SyncClass::Tolerable) continue;
        clients[k].model = server.global_model;
        ++m_sync;
    }
    return m_sync;
}

SelectionResult cfcfm_select(const std::vector<Arrival>& arrivals,
                             const std::set<int>& picked_last, double C, int m,
                             double round_deadline) {
    SelectionResult res;
    res.close_time = arrivals.empty() ? 0.0 : round_deadline;
    const size_t quota = static_cast<size_t>(std::ceil(C * m));

    std::vector<int> priority_picks;
    std::vector<Arrival> queue;  // committed clients that were picked last round
    for (const Arrival& a : arrivals) {
        if (priority_picks.size() >= quota) {
            // selection already closed; the commit still lands in the bypass
            queue.push_back(a);
            continue;
        }
        if (picked_last.count(a.client_id) == 0) {
            priority_picks.push_back(a.client_id);
            if (priority_picks.size() == quota) res.close_time = a.time;
        } else {
            queue.push_back(a);
        }
    }

    res.picked = priority_picks;
    if (res.picked.size() < quota) {
        // quota unmet from the compensation list: fill from Q in arrival order
        size_t need = quota - res.picked.size();
        for (size_t i = 0; i < queue.size() && i < need; ++i)
            res.picked.push_back(queue[i].client_id);
    }

    std::set<int> picked_set(res.picked.begin(), res.picked.end());
    for (const Arrival& a : arrivals)
        if (picked_set.count(a.client_id) == 0) res.undrafted.push_back(a.client_id);

    std::sort(res.picked.begin(), res.picked.end());
    std::sort(res.undrafted.begin(), res.undrafted.end());
    return res;
}

void pre_aggregation_cache_update(ServerState& server, const std::vector<int>& picked,
                                  const std::map<int, ModelParams>& trained_models,
                                  const std::vector<int>& deprecated_ids) {
    std::set<int> picked_set(picked.begin(), picked.end());
    for (int k : deprecated_ids)
        if (picked_set.count(k))
            throw InternalError("client " + std::to_string(k) +
                                " is both picked and deprecated at commit time");
    for (int k : picked) {
        auto it = trained_models.find(k);
        if (it == trained_models.end())
            throw InternalError("picked client " + std::to_string(k) + " has no trained model");
        server.cache[k] = it->second;
    }
    for (int k : deprecated_ids) server.cache[k] = server.global_model;
}

ModelParams aggregate(const std::vector<ModelParams>& cache,
                      const std::vector<size_t>& partition_sizes, int t) {
    if (cache.empty()) throw InternalError("aggregate: empty cache");
    if (cache.size() != partition_sizes.size())
        throw InternalError("aggregate: cache/partition size mismatch");
    const double n = static_cast<double>(
        std::accumulate(partition_sizes.begin(), partition_sizes.end(), size_t{0}));

    ModelParams out = ModelParams::zeros(cache[0].dim(), t);
    for (size_t k = 0; k < cache.size(); ++k) {
        if (!cache[k].all_finite())
            throw NumericDivergence("aggregate: non-finite cache entry for client " +
                                    std::to_string(k) + " at round " + std::to_string(t));
        double wk = partition_sizes[k] / n;
        for (size_t j = 0; j < out.dim(); ++j) out.weights[j] += wk * cache[k].weights[j];
    }
    return out;
}

void post_aggregation_cache_update(ServerState& server, const std::vector<int>& undrafted) {
    for (int k : undrafted) {
        auto it = server.bypass.find(k);
        if (it == server.bypass.end())
            throw InternalError("undrafted client " + std::to_string(k) +
                                " has no bypass entry");
        server.cache[k] = it->second;
    }
    server.bypass.clear();
}

// --- Simulation ------------------------------------------------------------

Simulation::Simulation(const Dataset& dataset, SimConfig cfg)
    : dataset_(dataset), cfg_(std::move(cfg)) {
    if (cfg_.m < 1) throw ConfigError("m must be >= 1");
    if (cfg_.rounds < 0) throw ConfigError("rounds must be >= 0");
    if (cfg_.selection_fraction <= 0.0 || cfg_.selection_fraction > 1.0)
        throw ConfigError("selection fraction C must be in (0, 1]");
    if (cfg_.lag_tolerance < 1) throw ConfigError("lag tolerance must be >= 1");
    cfg_.learner.validate();

    partitions_ = partition_dataset(dataset_, cfg_.m, cfg_.partition_std_frac, cfg_.master_seed);
    partition_sizes_.resize(cfg_.m);
    for (int k = 0; k < cfg_.m; ++k) partition_sizes_[k] = partitions_[k].size();
    profiles_ = sample_population(cfg_.m, cfg_.population, partition_sizes_, cfg_.master_seed);
    for (auto& p : profiles_) p.bandwidth = cfg_.timing.client_bw;

    ModelParams w0 = ModelParams::zeros(model_dim(cfg_.learner.model_kind, dataset_), 0);
    Rng init_rng(derive_seed(cfg_.master_seed, "init"));
    for (double& w : w0.weights) w = init_rng.normal(0.0, cfg_.init_scale);

    server_.global_model = w0;
    server_.cache.assign(cfg_.m, w0);
    server_.lag_tolerance = cfg_.lag_tolerance;
    server_.selection_fraction = cfg_.selection_fraction;

    clients_.resize(cfg_.m);
    for (int k = 0; k < cfg_.m; ++k) {
        clients_[k].id = k;
        clients_[k].model = w0;
    }
}

ModelParams Simulation::train_committed(int k, const ModelParams& base, int t) {
    uint64_t seed = derive_seed(cfg_.master_seed, "train", static_cast<uint64_t>(t),
                                static_cast<uint64_t>(k));
    ModelParams out = client_update(k, base, partitions_[k], dataset_, cfg_.learner, seed, t);
    out.version = t;  // committed work carries the round stamp
    return out;
}

double Simulation::participant_time(int k, bool synced_this_round) const {
    auto ud = t_updown(profiles_[k], cfg_.timing);
    double tt = t_train(profiles_[k], cfg_.learner.epochs, cfg_.learner.batch_size) + ud.up;
    if (synced_this_round) tt += ud.down;
    return tt;
}

void Simulation::finish_report(RoundReport& rep, int t, double round_wasted,
                               double round_attempted) {
    rep.round = t;
    rep.protocol = to_string(cfg_.protocol);
    EvalResult ev = evaluate(reported_model(), dataset_, cfg_.learner);
    rep.loss = ev.loss;
    rep.accuracy = ev.accuracy;
    rep.futility = round_attempted > 0 ? round_wasted / round_attempted : 0.0;
    wasted_epochs_ += round_wasted;
    attempted_epochs_ += round_attempted;
}

ModelParams Simulation::reported_model() const {
    if (cfg_.protocol != Protocol::FullyLocal) return server_.global_model;
    std::vector<ModelParams> locals(cfg_.m);
    for (int k = 0; k < cfg_.m; ++k) locals[k] = clients_[k].model;
    return aggregate(locals, partition_sizes_, t_);
}

RoundReport Simulation::run_round() {
    int t = ++t_;
    switch (cfg_.protocol) {
        case Protocol::Safa: return run_round_safa(t);
        case Protocol::FedAvg: return run_round_fedavg(t);
        case Protocol::FedCs: return run_round_fedcs(t);
        case Protocol::FullyLocal: return run_round_fully_local(t);
    }
    throw InternalError("unreachable protocol");
}

std::vector<RoundReport> Simulation::run_all() {
    std::vector<RoundReport> out;
    out.reserve(cfg_.rounds);
    for (int i = 0; i < cfg_.rounds; ++i) out.push_back(run_round());
    return out;
}

RoundReport Simulation::run_round_safa(int t) {
    RoundReport rep;
    const int m = cfg_.m;
    const double E = cfg_.learner.epochs;

    // 1. classify from versions, then lag-tolerant distribution
    std::vector<int> versions(m);
    for (int k = 0; k < m; ++k) versions[k] = clients_[k].model.version;
    auto classes = classify_clients(versions, t, cfg_.lag_tolerance);

    double round_wasted = 0.0;
    for (int k = 0; k < m; ++k) {
        if (classes[k] == SyncClass::Deprecated) {
            ++rep.deprecated;
            // forced sync discards whatever partial work the straggler held
            round_wasted += clients_[k].inflight_epochs;
            clients_[k].inflight_epochs = 0.0;
        }
    }
    rep.m_sync = distribute(server_, clients_, classes);
    rep.t_dist = t_dist(rep.m_sync, cfg_.timing);

    // versions the trainers start from, for the VV metric
    std::vector<int> base_versions(m);
    for (int k = 0; k < m; ++k) base_versions[k] = clients_[k].model.version;

    // 2. every client trains; crashes and the time cap gate the commits
    auto crashes = sample_crashes(profiles_, t, cfg_.master_seed);
    std::vector<Arrival> arrivals;
    std::map<int, ModelParams> trained;
    std::vector<int> crashed_ids;
    double round_attempted = m * E;
    for (int k = 0; k < m; ++k) {
        bool synced = classes[k] != SyncClass::Tolerable;
        if (crashes[k].crashed) {
            clients_[k].outcome = RoundOutcome::Crashed;
            clients_[k].inflight_epochs = crashes[k].time_fraction * E;
            crashed_ids.push_back(k);
            continue;
        }
        double tt = participant_time(k, synced);
        if (tt > cfg_.timing.t_lim) {
            // would finish after the cap: reckoned crashed this round
            clients_[k].outcome = RoundOutcome::Crashed;
            clients_[k].inflight_epochs = E;
            crashed_ids.push_back(k);
            continue;
        }
        arrivals.push_back({k, tt});
    }
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return a.time != b.time ? a.time < b.time : a.client_id < b.client_id;
    });

    // 3. post-training selection
    std::set<int> picked_last;
    for (int k = 0; k < m; ++k)
        if (server_.missed_last_round.count(k) == 0) picked_last.insert(k);
    auto sel = cfcfm_select(arrivals, picked_last, cfg_.selection_fraction, m,
                            cfg_.timing.t_lim);

    for (const Arrival& a : arrivals) {
        int k = a.client_id;
        ModelParams w = train_committed(k, clients_[k].model, t);
        clients_[k].model = w;
        clients_[k].inflight_epochs = 0.0;
        trained.emplace(k, std::move(w));
    }
    for (int k : sel.picked) clients_[k].outcome = RoundOutcome::Picked;
    for (int k : sel.undrafted) {
        clients_[k].outcome = RoundOutcome::Undrafted;
        server_.bypass[k] = trained.at(k);
    }

    // 4. three-step discriminative aggregation
    std::vector<int> still_deprecated;
    for (int k : crashed_ids)
        if (classes[k] == SyncClass::Deprecated) still_deprecated.push_back(k);
    pre_aggregation_cache_update(server_, sel.picked, trained, still_deprecated);
    server_.global_model = aggregate(server_.cache, partition_sizes_, t);
    post_aggregation_cache_update(server_, sel.undrafted);

    server_.missed_last_round.clear();
    std::set<int> picked_now(sel.picked.begin(), sel.picked.end());
    for (int k = 0; k < m; ++k)
        if (picked_now.count(k) == 0) server_.missed_last_round.insert(k);

    // 5. report
    std::vector<double> waited;
    waited.reserve(arrivals.size());
    if (!arrivals.empty()) {
        if (arrivals.size() >= static_cast<size_t>(std::ceil(cfg_.selection_fraction * m)))
            waited.push_back(sel.close_time);
        else
            waited.push_back(std::numeric_limits<double>::infinity());  // still hoping
    }
    rep.round_length = round_length(waited, rep.t_dist, cfg_.timing);
    rep.picked = static_cast<int>(sel.picked.size());
    rep.undrafted = static_cast<int>(sel.undrafted.size());
    rep.crashed = static_cast<int>(crashed_ids.size());
    rep.eur = eur_empirical(picked_now, {crashed_ids.begin(), crashed_ids.end()}, m);
    rep.version_variance = population_variance(base_versions);
    finish_report(rep, t, round_wasted, round_attempted);
    return rep;
}

RoundReport Simulation::run_round_fedavg(int t) {
    RoundReport rep;
    const int m = cfg_.m;
    const double E = cfg_.learner.epochs;
    const int quota = static_cast<int>(std::ceil(cfg_.selection_fraction * m));

    // selection before training, uniformly at random
    std::vector<int> ids(m);
    std::iota(ids.begin(), ids.end(), 0);
    Rng sel_rng(derive_seed(cfg_.master_seed, "fedavg-select", static_cast<uint64_t>(t)));
    sel_rng.shuffle(ids);
    std::vector<int> selected(ids.begin(), ids.begin() + quota);
    std::sort(selected.begin(), selected.end());

    for (int k = 0; k < m; ++k) clients_[k].outcome = RoundOutcome::NotRun;
    for (int k : selected) {
        clients_[k].model = server_.global_model;  // forced overwrite
        clients_[k].inflight_epochs = 0.0;
    }
    rep.m_sync = quota;
    rep.t_dist = t_dist(rep.m_sync, cfg_.timing);

    auto crashes = sample_crashes(profiles_, t, cfg_.master_seed);
    std::vector<double> waited;
    std::vector<int> committed;
    std::set<int> crashed_set;
    double round_wasted = 0.0;
    for (int k : selected) {
        if (crashes[k].crashed) {
            clients_[k].outcome = RoundOutcome::Crashed;
            crashed_set.insert(k);
            round_wasted += crashes[k].time_fraction * E;  // discarded at next overwrite
            waited.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        double tt = participant_time(k, true);
        if (tt > cfg_.timing.t_lim) {
            clients_[k].outcome = RoundOutcome::Crashed;
            crashed_set.insert(k);
            round_wasted += E;  // finished too late; full effort discarded
            waited.push_back(tt);
            continue;
        }
        waited.push_back(tt);
        committed.push_back(k);
    }

    if (committed.empty()) {
        server_.global_model.version = t;  // weights unchanged, recorded below
    } else {
        std::vector<ModelParams> entries;
        std::vector<size_t> sizes;
        for (int k : committed) {
            ModelParams w = train_committed(k, clients_[k].model, t);
            clients_[k].model = w;
            clients_[k].outcome = RoundOutcome::Picked;
            entries.push_back(std::move(w));
            sizes.push_back(partition_sizes_[k]);
        }
        server_.global_model = aggregate(entries, sizes, t);
    }

    rep.round_length = round_length(waited, rep.t_dist, cfg_.timing);
    rep.picked = static_cast<int>(committed.size());
    rep.crashed = static_cast<int>(crashed_set.size());
    rep.eur = eur_empirical({committed.begin(), committed.end()}, crashed_set, m);
    rep.version_variance = 0.0;  // every trainer starts from w(t-1)
    finish_report(rep, t, round_wasted, selected.size() * E);
    return rep;
}

RoundReport Simulation::run_round_fedcs(int t) {
    RoundReport rep;
    const int m = cfg_.m;
    const double E = cfg_.learner.epochs;
    const int quota = static_cast<int>(std::ceil(cfg_.selection_fraction * m));

    // perfect work-time estimation: filter the too-slow, take the fastest
    std::vector<std::pair<double, int>> est;
    for (int k = 0; k < m; ++k) {
        double tt = participant_time(k, true);
        if (tt <= cfg_.timing.t_lim) est.push_back({tt, k});
    }
    std::sort(est.begin(), est.end());
    if (est.size() > static_cast<size_t>(quota)) est.resize(quota);

    std::vector<int> selected;
    double deadline = 0.0;
    for (auto& [tt, k] : est) {
        selected.push_back(k);
        deadline = std::max(deadline, tt);
    }
    std::sort(selected.begin(), selected.end());

    for (int k = 0; k < m; ++k) clients_[k].outcome = RoundOutcome::NotRun;
    for (int k : selected) {
        clients_[k].model = server_.global_model;
        clients_[k].inflight_epochs = 0.0;
    }
    rep.m_sync = static_cast<int>(selected.size());
    rep.t_dist = t_dist(rep.m_sync, cfg_.timing);

    auto crashes = sample_crashes(profiles_, t, cfg_.master_seed);
    std::vector<int> committed;
    std::set<int> crashed_set;
    double round_wasted = 0.0;
    for (int k : selected) {
        if (crashes[k].crashed) {
            clients_[k].outcome = RoundOutcome::Crashed;
            crashed_set.insert(k);
            round_wasted += crashes[k].time_fraction * E;
            continue;
        }
        committed.push_back(k);
    }

    if (!committed.empty()) {
        std::vector<ModelParams> entries;
        std::vector<size_t> sizes;
        for (int k : committed) {
            ModelParams w = train_committed(k, clients_[k].model, t);
            clients_[k].model = w;
            clients_[k].outcome = RoundOutcome::Picked;
            entries.push_back(std::move(w));
            sizes.push_back(partition_sizes_[k]);
        }
        server_.global_model = aggregate(entries, sizes, t);
    } else {
        server_.global_model.version = t;
    }

    // the server plans for the slowest selected client and closes then
    std::vector<double> waited;
    if (!selected.empty()) waited.push_back(deadline);
    rep.round_length = round_length(waited, rep.t_dist, cfg_.timing);
    rep.picked = static_cast<int>(committed.size());
    rep.crashed = static_cast<int>(crashed_set.size());
    rep.eur = eur_empirical({committed.begin(), committed.end()}, crashed_set, m);
    rep.version_variance = 0.0;
    finish_report(rep, t, round_wasted, selected.size() * E);
    return rep;
}

RoundReport Simulation::run_round_fully_local(int t) {
    RoundReport rep;
    const int m = cfg_.m;

    std::vector<int> base_versions(m);
    for (int k = 0; k < m; ++k) base_versions[k] = clients_[k].model.version;

    auto crashes = sample_crashes(profiles_, t, cfg_.master_seed);
    std::vector<double> waited;
    int committed = 0, crashed = 0;
    std::set<int> committed_set;
    for (int k = 0; k < m; ++k) {
        if (crashes[k].crashed) {
            clients_[k].outcome = RoundOutcome::Crashed;
            ++crashed;
            continue;
        }
        double tt = t_train(profiles_[k], cfg_.learner.epochs, cfg_.learner.batch_size);
        clients_[k].model = train_committed(k, clients_[k].model, t);
        clients_[k].outcome = RoundOutcome::Picked;
        committed_set.insert(k);
        ++committed;
        waited.push_back(tt);
    }

    rep.m_sync = 0;
    rep.t_dist = 0.0;
    rep.round_length = round_length(waited, 0.0, cfg_.timing);
    rep.picked = committed;
    rep.crashed = crashed;
    rep.eur = eur_empirical(committed_set, {}, m);
    rep.version_variance = population_variance(base_versions);
    finish_report(rep, t, 0.0, m * static_cast<double>(cfg_.learner.epochs));
    return rep;
}

}  // namespace safa
