#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safa/protocol.hpp"

namespace safa {

// Which dataset backs the run. The CSV-backed tasks need data.path; the
// synthetic ones are generated from the master seed.
enum class TaskPreset {
    Regression,       // CSV, regression learner (task-1 shape)
    Classify,         // CSV, softmax learner (task-2 shape)
    Svm,              // CSV, linear SVM learner (task-3 shape)
    SyntheticRegression,
    SyntheticClassify,
    SyntheticSvm,
};

std::string to_string(TaskPreset t);
TaskPreset task_from_string(const std::string& s);
TaskKind task_kind_of(TaskPreset t);

struct RunConfig {
    Protocol protocol = Protocol::Safa;
    TaskPreset task = TaskPreset::SyntheticRegression;

    int m = 5;
    int rounds = 100;
    double selection_fraction = 0.5;  // C
    double crash_prob = 0.1;          // cr
    int lag_tolerance = 5;            // tau
    uint64_t master_seed = 1;
    std::string output_dir = "out";

    std::string data_path;            // CSV tasks only
    size_t synth_n = 506;
    size_t synth_d = 13;
    int synth_classes = 4;
    double partition_std_frac = 0.3;

    LearnerSpec learner;
    TimingConfig timing;
    PopulationConfig population;

    void validate() const;
    SimConfig sim_config() const;
};

// Paper-table defaults per task shape: m, rounds, E, B, lr, round cap and
// per-model distribution time.
RunConfig default_config(TaskPreset task);

// Key-value config file with [sections]; see serialize_config for the schema.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// Applies "section.key=value" (as from a --set flag) onto an existing config.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// FNV-64 over the canonical serialized form, as a hex string.
std::string config_hash(const RunConfig& cfg);

Dataset build_dataset(const RunConfig& cfg);

// Cartesian sweep over any subset of {C, cr, tau, protocol, seed}.
struct SweepSpec {
    RunConfig base;
    std::vector<double> C_values;
    std::vector<double> cr_values;
    std::vector<int> tau_values;
    std::vector<Protocol> protocol_values;
    std::vector<uint64_t> seed_values;

    struct Cell {
        RunConfig config;
        std::string label;  // "protocol=safa,C=0.5,cr=0.3,tau=5,seed=1"
    };
    std::vector<Cell> enumerate() const;
};

// Cell seed depends only on the base master seed and the cell's coordinate
// values, so a single cell can be re-run in isolation.
uint64_t derive_cell_seed(uint64_t master_seed, const std::string& cell_label);

}  // namespace safa
