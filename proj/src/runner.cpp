#include "safa/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "safa/errors.hpp"
#include "safa/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace safa {

namespace {

RunSummary summarize(const RunConfig& cfg, const std::vector<RoundReport>& rounds,
                     const Simulation& sim, const Dataset& dataset) {
    RunSummary s;
    s.protocol = to_string(cfg.protocol);
    s.rounds = static_cast<int>(rounds.size());
    s.config_hash = config_hash(cfg);

    EvalResult initial = evaluate(sim.reported_model(), dataset, cfg.learner);
    s.best_accuracy = initial.accuracy;
    s.best_loss = initial.loss;
    if (rounds.empty()) return s;

    double sum_len = 0, sum_dist = 0, sum_sync = 0, sum_eur = 0, sum_vv = 0;
    for (const RoundReport& r : rounds) {
        s.best_accuracy = std::max(s.best_accuracy, r.accuracy);
        s.best_loss = std::min(s.best_loss, r.loss);
        sum_len += r.round_length;
        sum_dist += r.t_dist;
        sum_sync += r.m_sync;
        sum_eur += r.eur;
        sum_vv += r.version_variance;
    }
    const double R = static_cast<double>(rounds.size());
    s.mean_round_length = sum_len / R;
    s.mean_t_dist = sum_dist / R;
    s.sync_ratio = sum_sync / (R * cfg.m);
    s.mean_eur = sum_eur / R;
    s.version_variance = sum_vv / R;
    s.futility = sim.total_attempted_epochs() > 0
                     ? futility(sim.total_wasted_epochs(), sim.total_attempted_epochs())
                     : 0.0;
    return s;
}

json summary_json(const RunSummary& s) {
    return json{{"protocol", s.protocol},
                {"rounds", s.rounds},
                {"best_accuracy", s.best_accuracy},
                {"best_loss", s.best_loss},
                {"mean_round_length", s.mean_round_length},
                {"mean_t_dist", s.mean_t_dist},
                {"sync_ratio", s.sync_ratio},
                {"mean_eur", s.mean_eur},
                {"version_variance", s.version_variance},
                {"futility", s.futility},
                {"config_hash", s.config_hash}};
}

}  // namespace

RunResult simulate(const RunConfig& cfg, const Dataset& dataset) {
    cfg.validate();
    Simulation sim(dataset, cfg.sim_config());
    RunResult res;
    res.rounds = sim.run_all();
    res.summary = summarize(cfg, res.rounds, sim, dataset);
    return res;
}

RunSummary run_experiment(const RunConfig& cfg, const Dataset& dataset,
                          const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    RunResult res = simulate(cfg, dataset);

    std::ofstream csv(fs::path(out_dir) / "rounds.csv", std::ios::binary);
    if (!csv) throw ConfigError("cannot write to output directory: " + out_dir);
    write_round_csv_header(csv, res.summary.config_hash);
    for (const RoundReport& r : res.rounds) write_round_csv_row(csv, r);
    csv.close();

    std::ofstream cfg_out(fs::path(out_dir) / "config.ini", std::ios::binary);
    cfg_out << serialize_config(cfg);
    cfg_out.close();

    std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::binary);
    js << summary_json(res.summary).dump(2) << "\n";
    return res.summary;
}

RunSummary run_experiment(const RunConfig& cfg) {
    cfg.validate();
    Dataset dataset = build_dataset(cfg);
    return run_experiment(cfg, dataset, cfg.output_dir);
}

void run_sweep(const SweepSpec& spec, int parallelism, const std::string& out_dir) {
    spec.base.validate();
    if (parallelism < 1) throw ConfigError("sweep parallelism must be >= 1");
    fs::create_directories(out_dir);

    auto cells = spec.enumerate();
    struct IndexRow {
        std::string label, path, status, error;
    };
    std::vector<IndexRow> index(cells.size());

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const auto& cell = cells[i];
            std::string cell_dir = (fs::path(out_dir) / ("cell_" + std::to_string(i))).string();
            IndexRow row{cell.label, cell_dir, "ok", ""};
            try {
                Dataset dataset = build_dataset(cell.config);
                run_experiment(cell.config, dataset, cell_dir);
            } catch (const std::exception& e) {
                row.status = "error";
                row.error = e.what();
            }
            index[i] = std::move(row);
        }
    };

    std::vector<std::thread> pool;
    int threads = std::min<int>(parallelism, static_cast<int>(cells.size()));
    for (int i = 0; i < std::max(1, threads); ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::ofstream idx(fs::path(out_dir) / "index.csv", std::ios::binary);
    idx << "cell,label,path,status,error\n";
    for (size_t i = 0; i < index.size(); ++i) {
        std::string err = index[i].error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        idx << i << "," << index[i].label << "," << index[i].path << "," << index[i].status
            << "," << err << "\n";
    }
}

std::vector<BiasJob> load_bias_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open bias params file: " + path);
    std::vector<BiasJob> jobs;
    std::string line;
    size_t line_no = 0;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = line.substr(0, line.find('#'));
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!header_skipped && line.find("C") != std::string::npos &&
            line.find("cr_A") != std::string::npos) {
            header_skipped = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": non-numeric value \"" + cell + "\"");
            }
        }
        if (vals.size() < 5 || vals.size() > 6)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected C,R,cr_A,cr_B,rounds[,trials]");
        BiasJob job;
        job.params.C = vals[0];
        job.params.R = vals[1];
        job.params.cr_A = vals[2];
        job.params.cr_B = vals[3];
        job.params.max_round = static_cast<int>(vals[4]);
        if (vals.size() == 6) job.trials = static_cast<int>(vals[5]);
        job.params.validate();
        jobs.push_back(job);
    }
    if (jobs.empty()) throw ConfigError("bias params file has no parameter rows: " + path);
    return jobs;
}

std::vector<std::string> run_bias_analysis(const std::vector<BiasJob>& jobs, uint64_t seed,
                                           const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> paths;
    for (size_t i = 0; i < jobs.size(); ++i) {
        const BiasJob& job = jobs[i];
        BiasTrace analytic = bias_safa_recurrence(job.params);
        MonteCarloConfig mc;
        mc.trials = job.trials;
        mc.seed = derive_seed(seed, "bias-job", i);
        BiasTrace est = bias_monte_carlo(job.params, mc);
        double fedavg = bias_fedavg(job.params.cr_A, job.params.cr_B);
        BiasCase bc = classify_bias_case(job.params.C, job.params.R);

        std::string path =
            (fs::path(out_dir) / ("bias_" + std::to_string(i) + ".csv")).string();
        std::ofstream os(path, std::ios::binary);
        os << "# bias C=" << job.params.C << " R=" << job.params.R
           << " cr_A=" << job.params.cr_A << " cr_B=" << job.params.cr_B
           << " case=" << to_string(bc) << " trials=" << job.trials << "\n";
        os << "round,p_a,p_b,bias_analytic,bias_mc,mc_stderr,bias_fedavg,"
              "p_a_mc,p_b_mc\n";
        char buf[320];
        for (size_t r = 0; r < analytic.rounds(); ++r) {
            // delta-method standard error of the bias ratio
            double se = 0.0;
            if (est.p_b[r] > 0.0) {
                double ra = est.p_a[r] > 0 ? est.se_a[r] / est.p_a[r] : 0.0;
                double rb = est.se_b[r] / est.p_b[r];
                se = est.bias[r] * std::sqrt(ra * ra + rb * rb);
            }
            std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                          r + 1, analytic.p_a[r], analytic.p_b[r], analytic.bias[r],
                          est.bias[r], se, fedavg, est.p_a[r], est.p_b[r]);
            os << buf;
        }
        paths.push_back(path);
    }
    return paths;
}

}  // namespace safa
