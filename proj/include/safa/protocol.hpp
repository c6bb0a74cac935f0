#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "safa/data.hpp"
#include "safa/env.hpp"
#include "safa/learner.hpp"
#include "safa/model.hpp"
#include "safa/report.hpp"

namespace safa {

enum class Protocol { Safa, FedAvg, FedCs, FullyLocal };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

// Sync class is assigned at round start from versions only; the round
// outcome at selection time only.
enum class SyncClass { UpToDate, Tolerable, Deprecated };
enum class RoundOutcome { Picked, Undrafted, Crashed, NotRun };

struct ClientState {
    int id = 0;
    ModelParams model;                 // local weights + version
    SyncClass sync_class = SyncClass::UpToDate;
    RoundOutcome outcome = RoundOutcome::NotRun;
    double inflight_epochs = 0.0;      // uncommitted partial work, discarded on forced sync
};

struct ServerState {
    ModelParams global_model;               // version t-1 at the start of round t
    std::vector<ModelParams> cache;         // one entry per client (w*_k)
    std::map<int, ModelParams> bypass;      // undrafted updates awaiting post-aggregation
    std::set<int> missed_last_round;        // complement of P(t-1)
    int lag_tolerance = 5;
    double selection_fraction = 0.5;
};

// --- protocol primitives -------------------------------------------------

// v = t-1 -> UpToDate; t-tau <= v < t-1 -> Tolerable; v < t-tau -> Deprecated.
// A version >= t means a client got ahead of the server: internal error.
std::vector<SyncClass> classify_clients(const std::vector<int>& client_versions, int t, int tau);

// Lag-tolerant distribution: up-to-date and deprecated clients receive a copy
// of the global model; tolerable clients are left untouched. Returns m_sync.
int distribute(const ServerState& server, std::vector<ClientState>& clients,
               const std::vector<SyncClass>& classes);

struct Arrival {
    int client_id = 0;
    double time = 0.0;
};

struct SelectionResult {
    std::vector<int> picked;     // ascending client id
    std::vector<int> undrafted;  // ascending client id
    double close_time = 0.0;     // when the quota was met; deadline if it never was
};

// Compensatory first-come-first-merge. Arrivals must be sorted by time
// (ties by id). Clients absent from picked_last are picked in arrival order
// until quota = ceil(C*m) is met; any shortfall is filled from the rest in
// arrival order. Everyone else who committed is undrafted.
SelectionResult cfcfm_select(const std::vector<Arrival>& arrivals,
                             const std::set<int>& picked_last, double C, int m,
                             double round_deadline);

// Pre-aggregation cache update: picked entries take the fresh local model,
// still-deprecated (synced but uncommitted) entries take the global model.
void pre_aggregation_cache_update(ServerState& server, const std::vector<int>& picked,
                                  const std::map<int, ModelParams>& trained_models,
                                  const std::vector<int>& deprecated_ids);

// n_k-weighted average over all cache entries; result is stamped version t.
ModelParams aggregate(const std::vector<ModelParams>& cache,
                      const std::vector<size_t>& partition_sizes, int t);

// Post-aggregation cache update: undrafted updates move from the bypass into
// the cache; the bypass never persists past the round.
void post_aggregation_cache_update(ServerState& server, const std::vector<int>& undrafted);

// --- the simulator --------------------------------------------------------

struct SimConfig {
    Protocol protocol = Protocol::Safa;
    int m = 5;
    int rounds = 100;
    double selection_fraction = 0.5;  // C
    int lag_tolerance = 5;            // tau
    double partition_std_frac = 0.3;
    LearnerSpec learner;
    TimingConfig timing;
    PopulationConfig population;
    uint64_t master_seed = 1;
    double init_scale = 0.01;  // stddev of the seeded weight init
};

// Deterministic single-run simulator: one instance owns the population,
// server state and metric accumulators for a whole protocol run.
class Simulation {
public:
    Simulation(const Dataset& dataset, SimConfig cfg);

    RoundReport run_round();                 // advances to the next round
    std::vector<RoundReport> run_all();      // all configured rounds

    int current_round() const { return t_; } // rounds completed so far
    const ModelParams& global_model() const { return server_.global_model; }
    // Fully-local reports on the one-shot average; others on the global model.
    ModelParams reported_model() const;

    const std::vector<ClientState>& clients() const { return clients_; }
    const ServerState& server() const { return server_; }
    const std::vector<ClientProfile>& profiles() const { return profiles_; }
    // scripted scenarios (per-client crash probabilities, speed overrides)
    std::vector<ClientProfile>& mutable_profiles() { return profiles_; }
    const std::vector<Partition>& partitions() const { return partitions_; }

    double total_wasted_epochs() const { return wasted_epochs_; }
    double total_attempted_epochs() const { return attempted_epochs_; }

private:
    RoundReport run_round_safa(int t);
    RoundReport run_round_fedavg(int t);
    RoundReport run_round_fedcs(int t);
    RoundReport run_round_fully_local(int t);

    ModelParams train_committed(int k, const ModelParams& base, int t);
    double participant_time(int k, bool synced_this_round) const;
    void finish_report(RoundReport& rep, int t, double round_wasted, double round_attempted);

    const Dataset& dataset_;
    SimConfig cfg_;
    std::vector<Partition> partitions_;
    std::vector<size_t> partition_sizes_;
    std::vector<ClientProfile> profiles_;
    std::vector<ClientState> clients_;
    ServerState server_;
    int t_ = 0;
    double wasted_epochs_ = 0.0;
    double attempted_epochs_ = 0.0;
};

}  // namespace safa
