#include "safa/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "safa/errors.hpp"

namespace safa {

std::string to_string(TaskPreset t) {
    switch (t) {
        case TaskPreset::Regression: return "regression";
        case TaskPreset::Classify: return "classify";
        case TaskPreset::Svm: return "svm";
        case TaskPreset::SyntheticRegression: return "synthetic-regression";
        case TaskPreset::SyntheticClassify: return "synthetic-classify";
        case TaskPreset::SyntheticSvm: return "synthetic-svm";
    }
    return "?";
}

TaskPreset task_from_string(const std::string& s) {
    if (s == "regression") return TaskPreset::Regression;
    if (s == "classify") return TaskPreset::Classify;
    if (s == "svm") return TaskPreset::Svm;
    if (s == "synthetic-regression") return TaskPreset::SyntheticRegression;
    if (s == "synthetic-classify") return TaskPreset::SyntheticClassify;
    if (s == "synthetic-svm") return TaskPreset::SyntheticSvm;
    throw ConfigError("unknown task: " + s);
}

TaskKind task_kind_of(TaskPreset t) {
    switch (t) {
        case TaskPreset::Regression:
        case TaskPreset::SyntheticRegression:
            return TaskKind::Regression;
        case TaskPreset::Classify:
        case TaskPreset::SyntheticClassify:
            return TaskKind::Classification;
        case TaskPreset::Svm:
        case TaskPreset::SyntheticSvm:
            return TaskKind::BinaryMargin;
    }
    return TaskKind::Regression;
}

void RunConfig::validate() const {
    if (m < 1) throw ConfigError("run.m must be >= 1");
    if (rounds < 0) throw ConfigError("run.rounds must be >= 0");
    if (selection_fraction <= 0.0 || selection_fraction > 1.0)
        throw ConfigError("run.C must be in (0, 1]");
    if (crash_prob < 0.0 || crash_prob > 1.0) throw ConfigError("run.cr must be in [0, 1]");
    if (lag_tolerance < 1) throw ConfigError("run.tau must be >= 1");
    if (partition_std_frac < 0.0) throw ConfigError("data.partition_std_frac must be >= 0");
    if (synth_n < 1 || synth_d < 1) throw ConfigError("data.synth_n and synth_d must be >= 1");
    if (synth_classes < 2) throw ConfigError("data.synth_classes must be >= 2");
    if (timing.model_size_bits <= 0) throw ConfigError("timing.model_size_bits must be > 0");
    if (timing.client_bw <= 0) throw ConfigError("timing.client_bw must be > 0");
    if (timing.server_bw <= 0) throw ConfigError("timing.server_bw must be > 0");
    if (timing.t_lim <= 0) throw ConfigError("timing.t_lim must be > 0");
    if (population.perf_lambda <= 0) throw ConfigError("population.perf_lambda must be > 0");
    if (population.perf_base <= 0) throw ConfigError("population.perf_base must be > 0");
    if (population.perf_floor_frac < 0 || population.perf_floor_frac >= 1)
        throw ConfigError("population.perf_floor_frac must be in [0, 1)");
    bool csv_task = task == TaskPreset::Regression || task == TaskPreset::Classify ||
                    task == TaskPreset::Svm;
    if (csv_task && data_path.empty())
        throw ConfigError("data.path is required for CSV-backed task \"" + to_string(task) +
                          "\"");
    learner.validate();
}

SimConfig RunConfig::sim_config() const {
    SimConfig sc;
    sc.protocol = protocol;
    sc.m = m;
    sc.rounds = rounds;
    sc.selection_fraction = selection_fraction;
    sc.lag_tolerance = lag_tolerance;
    sc.partition_std_frac = partition_std_frac;
    sc.learner = learner;
    sc.timing = timing;
    sc.population = population;
    sc.population.crash_prob = crash_prob;
    sc.master_seed = master_seed;
    return sc;
}

RunConfig default_config(TaskPreset task) {
    RunConfig c;
    c.task = task;
    switch (task_kind_of(task)) {
        case TaskKind::Regression:  // task-1 shape
            c.m = 5;
            c.rounds = 100;
            c.learner.model_kind = ModelKind::LinearRegression;
            c.learner.epochs = 3;
            c.learner.batch_size = 5;
            c.learner.learning_rate = 1e-4;
            c.timing.t_lim = 830.0;
            c.timing.per_model_dist_time = 0.404;
            c.synth_n = 506;
            c.synth_d = 13;
            break;
        case TaskKind::Classification:  // task-2 shape
            c.m = 100;
            c.rounds = 50;
            c.learner.model_kind = ModelKind::SoftmaxClassifier;
            c.learner.epochs = 5;
            c.learner.batch_size = 40;
            c.learner.learning_rate = 1e-3;
            c.timing.t_lim = 5600.0;
            c.timing.per_model_dist_time = 0.204;
            c.synth_n = 7000;
            c.synth_d = 16;
            c.synth_classes = 10;
            break;
        case TaskKind::BinaryMargin:  // task-3 shape
            c.m = 500;
            c.rounds = 100;
            c.learner.model_kind = ModelKind::LinearSVM;
            c.learner.epochs = 5;
            c.learner.batch_size = 100;
            c.learner.learning_rate = 1e-2;
            c.timing.t_lim = 1620.0;
            c.timing.per_model_dist_time = 0.404;
            c.synth_n = 18648;
            c.synth_d = 35;
            break;
    }
    return c;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got \"" + v + "\"");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got \"" + v + "\"");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        uint64_t i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an unsigned integer, got \"" + v + "\"");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true/false, got \"" + v + "\"");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "run.protocol") c.protocol = protocol_from_string(v);
    else if (key == "run.task") c.task = task_from_string(v);
    else if (key == "run.m") c.m = static_cast<int>(parse_int(key, v));
    else if (key == "run.rounds") c.rounds = static_cast<int>(parse_int(key, v));
    else if (key == "run.C") c.selection_fraction = parse_double(key, v);
    else if (key == "run.cr") c.crash_prob = parse_double(key, v);
    else if (key == "run.tau") c.lag_tolerance = static_cast<int>(parse_int(key, v));
    else if (key == "run.seed") c.master_seed = parse_u64(key, v);
    else if (key == "run.output_dir") c.output_dir = v;
    else if (key == "data.path") c.data_path = v;
    else if (key == "data.synth_n") c.synth_n = static_cast<size_t>(parse_int(key, v));
    else if (key == "data.synth_d") c.synth_d = static_cast<size_t>(parse_int(key, v));
    else if (key == "data.synth_classes") c.synth_classes = static_cast<int>(parse_int(key, v));
    else if (key == "data.partition_std_frac") c.partition_std_frac = parse_double(key, v);
    else if (key == "learner.model") {
        if (v == "linear_regression") c.learner.model_kind = ModelKind::LinearRegression;
        else if (v == "softmax_classifier") c.learner.model_kind = ModelKind::SoftmaxClassifier;
        else if (v == "linear_svm") c.learner.model_kind = ModelKind::LinearSVM;
        else throw ConfigError("learner.model: unknown model \"" + v + "\"");
    }
    else if (key == "learner.learning_rate") c.learner.learning_rate = parse_double(key, v);
    else if (key == "learner.epochs") c.learner.epochs = static_cast<int>(parse_int(key, v));
    else if (key == "learner.batch_size") c.learner.batch_size = static_cast<int>(parse_int(key, v));
    else if (key == "learner.svm_lambda") c.learner.svm_lambda = parse_double(key, v);
    else if (key == "timing.model_size_bits") c.timing.model_size_bits = parse_double(key, v);
    else if (key == "timing.client_bw") c.timing.client_bw = parse_double(key, v);
    else if (key == "timing.server_bw") c.timing.server_bw = parse_double(key, v);
    else if (key == "timing.t_lim") c.timing.t_lim = parse_double(key, v);
    else if (key == "timing.per_model_dist_time") c.timing.per_model_dist_time = parse_double(key, v);
    else if (key == "timing.cap_excludes_dist") c.timing.cap_excludes_dist = parse_bool(key, v);
    else if (key == "population.perf_lambda") c.population.perf_lambda = parse_double(key, v);
    else if (key == "population.perf_base") c.population.perf_base = parse_double(key, v);
    else if (key == "population.perf_floor_frac") c.population.perf_floor_frac = parse_double(key, v);
    else throw ConfigError("unknown config key: " + key);
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig c;
    bool task_seen = false;
    // first pass: the task preset decides the defaults everything else lands on
    {
        std::istringstream in(text);
        std::string line, section;
        while (std::getline(in, line)) {
            line = trim(line.substr(0, line.find('#')));
            if (line.empty()) continue;
            if (line.front() == '[') {
                section = trim(line.substr(1, line.find(']') - 1));
                continue;
            }
            size_t eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("config line has no '=': " + line);
            if (section + "." + trim(line.substr(0, eq)) == "run.task") {
                c = default_config(task_from_string(trim(line.substr(eq + 1))));
                task_seen = true;
            }
        }
    }
    if (!task_seen) c = default_config(c.task);

    std::istringstream in(text);
    std::string line, section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            size_t close = line.find(']');
            if (close == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, close - 1));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = section + "." + trim(line.substr(0, eq));
        apply_override(c, key, trim(line.substr(eq + 1)));
    }
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os << "[run]\n";
    os << "task = " << to_string(c.task) << "\n";
    os << "protocol = " << to_string(c.protocol) << "\n";
    os << "m = " << c.m << "\n";
    os << "rounds = " << c.rounds << "\n";
    os << "C = " << fmt(c.selection_fraction) << "\n";
    os << "cr = " << fmt(c.crash_prob) << "\n";
    os << "tau = " << c.lag_tolerance << "\n";
    os << "seed = " << c.master_seed << "\n";
    os << "output_dir = " << c.output_dir << "\n";
    os << "\n[data]\n";
    if (!c.data_path.empty()) os << "path = " << c.data_path << "\n";
    os << "synth_n = " << c.synth_n << "\n";
    os << "synth_d = " << c.synth_d << "\n";
    os << "synth_classes = " << c.synth_classes << "\n";
    os << "partition_std_frac = " << fmt(c.partition_std_frac) << "\n";
    os << "\n[learner]\n";
    os << "model = " << to_string(c.learner.model_kind) << "\n";
    os << "learning_rate = " << fmt(c.learner.learning_rate) << "\n";
    os << "epochs = " << c.learner.epochs << "\n";
    os << "batch_size = " << c.learner.batch_size << "\n";
    os << "svm_lambda = " << fmt(c.learner.svm_lambda) << "\n";
    os << "\n[timing]\n";
    os << "model_size_bits = " << fmt(c.timing.model_size_bits) << "\n";
    os << "client_bw = " << fmt(c.timing.client_bw) << "\n";
    os << "server_bw = " << fmt(c.timing.server_bw) << "\n";
    os << "t_lim = " << fmt(c.timing.t_lim) << "\n";
    os << "per_model_dist_time = " << fmt(c.timing.per_model_dist_time) << "\n";
    os << "cap_excludes_dist = " << (c.timing.cap_excludes_dist ? "true" : "false") << "\n";
    os << "\n[population]\n";
    os << "perf_lambda = " << fmt(c.population.perf_lambda) << "\n";
    os << "perf_base = " << fmt(c.population.perf_base) << "\n";
    os << "perf_floor_frac = " << fmt(c.population.perf_floor_frac) << "\n";
    return os.str();
}

std::string config_hash(const RunConfig& cfg) {
    uint64_t h = hash_str(serialize_config(cfg));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Dataset build_dataset(const RunConfig& c) {
    uint64_t seed = derive_seed(c.master_seed, "dataset");
    switch (c.task) {
        case TaskPreset::Regression:
        case TaskPreset::Classify:
        case TaskPreset::Svm:
            return load_csv_dataset(c.data_path, task_kind_of(c.task));
        case TaskPreset::SyntheticRegression:
            return make_synthetic_regression(c.synth_n, c.synth_d, seed);
        case TaskPreset::SyntheticClassify:
            return make_synthetic_classification(c.synth_n, c.synth_d, c.synth_classes, seed);
        case TaskPreset::SyntheticSvm:
            return make_synthetic_binary_margin(c.synth_n, c.synth_d, seed);
    }
    throw InternalError("unreachable task");
}

std::vector<SweepSpec::Cell> SweepSpec::enumerate() const {
    auto Cs = C_values.empty() ? std::vector<double>{base.selection_fraction} : C_values;
    auto crs = cr_values.empty() ? std::vector<double>{base.crash_prob} : cr_values;
    auto taus = tau_values.empty() ? std::vector<int>{base.lag_tolerance} : tau_values;
    auto protos = protocol_values.empty() ? std::vector<Protocol>{base.protocol} : protocol_values;
    auto seeds = seed_values.empty() ? std::vector<uint64_t>{base.master_seed} : seed_values;

    std::vector<Cell> cells;
    for (Protocol p : protos)
        for (double C : Cs)
            for (double cr : crs)
                for (int tau : taus)
                    for (uint64_t seed : seeds) {
                        Cell cell;
                        cell.config = base;
                        cell.config.protocol = p;
                        cell.config.selection_fraction = C;
                        cell.config.crash_prob = cr;
                        cell.config.lag_tolerance = tau;
                        std::ostringstream label;
                        label << "protocol=" << to_string(p) << ",C=" << fmt(C)
                              << ",cr=" << fmt(cr) << ",tau=" << tau << ",seed=" << seed;
                        cell.label = label.str();
                        cell.config.master_seed = derive_cell_seed(base.master_seed, cell.label);
                        cells.push_back(std::move(cell));
                    }
    return cells;
}

uint64_t derive_cell_seed(uint64_t master_seed, const std::string& cell_label) {
    return derive_seed(master_seed, "sweep-cell", hash_str(cell_label));
}

}  // namespace safa
