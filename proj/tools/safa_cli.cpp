#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safa/errors.hpp"
#include "safa/runner.hpp"

namespace {

using namespace safa;

// flags shared by run/sweep/validate-config
struct CommonOpts {
    std::string config_path;
    std::string task;
    std::string protocol;
    std::string output_dir;
    std::vector<std::string> sets;  // section.key=value
    int m = -1, rounds = -1, tau = -1;
    double C = -1.0, cr = -1.0;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "config file (ini-style)");
    cmd->add_option("--task", o.task, "task preset (regression|classify|svm|synthetic-*)");
    cmd->add_option("--protocol", o.protocol, "safa|fedavg|fedcs|local");
    cmd->add_option("-m,--clients", o.m, "number of clients");
    cmd->add_option("-r,--rounds", o.rounds, "number of federated rounds");
    cmd->add_option("-C,--fraction", o.C, "selection fraction C");
    cmd->add_option("--cr", o.cr, "per-round crash probability");
    cmd->add_option("--tau", o.tau, "lag tolerance");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("-o,--output", o.output_dir, "output directory");
    cmd->add_option("--set", o.sets, "override any config key, e.g. --set timing.t_lim=830")
        ->take_all();
}

RunConfig build_config(const CommonOpts& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) {
        cfg = load_config_file(o.config_path);
    } else if (!o.task.empty()) {
        cfg = default_config(task_from_string(o.task));
    } else {
        cfg = default_config(TaskPreset::SyntheticRegression);
    }
    if (!o.task.empty()) {
        TaskPreset t = task_from_string(o.task);
        if (t != cfg.task) {
            RunConfig fresh = default_config(t);
            fresh.output_dir = cfg.output_dir;
            cfg = fresh;
        }
    }
    if (!o.protocol.empty()) cfg.protocol = protocol_from_string(o.protocol);
    if (o.m >= 0) cfg.m = o.m;
    if (o.rounds >= 0) cfg.rounds = o.rounds;
    if (o.C >= 0) cfg.selection_fraction = o.C;
    if (o.cr >= 0) cfg.crash_prob = o.cr;
    if (o.tau >= 0) cfg.lag_tolerance = o.tau;
    if (o.seed >= 0) cfg.master_seed = static_cast<uint64_t>(o.seed);
    for (const std::string& kv : o.sets) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (const char* env = std::getenv("SAFA_OUTPUT_DIR")) cfg.output_dir = env;
    return cfg;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"SAFA semi-asynchronous federated learning simulator"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    auto* run_cmd = app.add_subcommand("run", "run one experiment and emit per-round CSV");
    add_common(run_cmd, run_opts);

    CommonOpts sweep_opts;
    std::string sweep_C, sweep_cr, sweep_tau, sweep_protocols, sweep_seeds;
    int parallelism = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "cartesian sweep over C/cr/tau/protocol/seed");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--sweep-C", sweep_C, "comma list of C values");
    sweep_cmd->add_option("--sweep-cr", sweep_cr, "comma list of crash probabilities");
    sweep_cmd->add_option("--sweep-tau", sweep_tau, "comma list of lag tolerances");
    sweep_cmd->add_option("--sweep-protocol", sweep_protocols, "comma list of protocols");
    sweep_cmd->add_option("--sweep-seed", sweep_seeds, "comma list of seeds");
    sweep_cmd->add_option("-j,--parallel", parallelism, "worker threads");

    std::string bias_params_path, bias_out = "out-bias";
    long long bias_seed = 1;
    auto* bias_cmd = app.add_subcommand("bias", "analytic vs Monte-Carlo selection bias");
    bias_cmd->add_option("params", bias_params_path,
                         "CSV of C,R,cr_A,cr_B,rounds[,trials] rows")->required();
    bias_cmd->add_option("-o,--output", bias_out, "output directory");
    bias_cmd->add_option("--seed", bias_seed, "Monte-Carlo seed");

    std::string defaults_task = "synthetic-regression";
    auto* defaults_cmd = app.add_subcommand("show-defaults", "print the resolved config");
    defaults_cmd->add_option("--task", defaults_task, "task preset to resolve");

    CommonOpts validate_opts;
    auto* validate_cmd = app.add_subcommand("validate-config", "parse and validate, no run");
    add_common(validate_cmd, validate_opts);

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        RunConfig cfg = build_config(run_opts);
        RunSummary s = run_experiment(cfg);
        std::cout << "protocol=" << s.protocol << " rounds=" << s.rounds
                  << " best_accuracy=" << s.best_accuracy << " SR=" << s.sync_ratio
                  << " mean_EUR=" << s.mean_eur << " futility=" << s.futility << "\n"
                  << "results in " << cfg.output_dir << "\n";
        return 0;
    }
    if (sweep_cmd->parsed()) {
        SweepSpec spec;
        spec.base = build_config(sweep_opts);
        if (!sweep_C.empty()) spec.C_values = parse_double_list(sweep_C);
        if (!sweep_cr.empty()) spec.cr_values = parse_double_list(sweep_cr);
        if (!sweep_tau.empty())
            for (double v : parse_double_list(sweep_tau))
                spec.tau_values.push_back(static_cast<int>(v));
        if (!sweep_protocols.empty()) {
            std::stringstream ss(sweep_protocols);
            std::string cell;
            while (std::getline(ss, cell, ','))
                spec.protocol_values.push_back(protocol_from_string(cell));
        }
        if (!sweep_seeds.empty())
            for (double v : parse_double_list(sweep_seeds))
                spec.seed_values.push_back(static_cast<uint64_t>(v));
        run_sweep(spec, parallelism, spec.base.output_dir);
        std::cout << "sweep of " << spec.enumerate().size() << " cells written to "
                  << spec.base.output_dir << "\n";
        return 0;
    }
    if (bias_cmd->parsed()) {
        auto jobs = load_bias_params(bias_params_path);
        if (const char* env = std::getenv("SAFA_OUTPUT_DIR")) bias_out = env;
        auto paths = run_bias_analysis(jobs, static_cast<uint64_t>(bias_seed), bias_out);
        for (const auto& p : paths) std::cout << p << "\n";
        return 0;
    }
    if (defaults_cmd->parsed()) {
        std::cout << serialize_config(default_config(task_from_string(defaults_task)));
        return 0;
    }
    if (validate_cmd->parsed()) {
        RunConfig cfg = build_config(validate_opts);
        cfg.validate();
        std::cout << "config ok (hash " << config_hash(cfg) << ")\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const safa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
