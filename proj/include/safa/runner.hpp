#pragma once

#include <string>
#include <vector>

#include "safa/bias.hpp"
#include "safa/config.hpp"

namespace safa {

struct RunSummary {
    std::string protocol;
    int rounds = 0;
    double best_accuracy = 0.0;
    double best_loss = 0.0;
    double mean_round_length = 0.0;
    double mean_t_dist = 0.0;
    double sync_ratio = 0.0;
    double mean_eur = 0.0;
    double version_variance = 0.0;
    double futility = 0.0;
    std::string config_hash;
};

// Executes the configured run, writes rounds.csv and summary.json under
// output_dir, returns the summary. Pass an existing dataset to share it
// across runs (e.g. inside a sweep); otherwise it is built from the config.
RunSummary run_experiment(const RunConfig& cfg);
RunSummary run_experiment(const RunConfig& cfg, const Dataset& dataset,
                          const std::string& out_dir);

// In-memory variant used by tests and the acceptance suite.
struct RunResult {
    std::vector<RoundReport> rounds;
    RunSummary summary;
};
RunResult simulate(const RunConfig& cfg, const Dataset& dataset);

// One result directory per cell plus an index.csv; failed cells are recorded
// in the index and do not stop the sweep.
void run_sweep(const SweepSpec& spec, int parallelism, const std::string& out_dir);

// One parameter set from a bias params file.
struct BiasJob {
    BiasParams params;
    int trials = 100000;
};

std::vector<BiasJob> load_bias_params(const std::string& path);

// Emits one comparison CSV per parameter row; returns the file paths.
std::vector<std::string> run_bias_analysis(const std::vector<BiasJob>& jobs, uint64_t seed,
                                           const std::string& out_dir);

}  // namespace safa
