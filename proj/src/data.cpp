#include "safa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "safa/errors.hpp"
#include "safa/rng.hpp"

namespace safa {

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Regression: return "regression";
        case TaskKind::Classification: return "classification";
        case TaskKind::BinaryMargin: return "binary_margin";
    }
    return "?";
}

void Dataset::validate() const {
    if (n < 1 || d < 1) throw ConfigError("dataset must have n >= 1 and d >= 1");
    if (features.size() != n * d) throw ConfigError("feature matrix size mismatch");
    if (labels.size() != n) throw ConfigError("label count does not match row count");
    switch (task_kind) {
        case TaskKind::Regression:
            break;
        case TaskKind::Classification:
            for (double y : labels) {
                double r = std::round(y);
                if (std::abs(y - r) > 1e-9 || r < 0 || r >= num_classes)
                    throw ConfigError("classification labels must be integers in [0, num_classes)");
            }
            break;
        case TaskKind::BinaryMargin:
            for (double y : labels)
                if (y != 1.0 && y != -1.0)
                    throw ConfigError("binary-margin labels must be exactly -1 or +1");
            break;
    }
}

std::vector<Partition> partition_dataset(const Dataset& dataset, int m,
                                         double mean_fraction_std, uint64_t rng_seed) {
    const size_t n = dataset.n;
    if (m < 1) throw ConfigError("partition count must be >= 1");
    if (static_cast<size_t>(m) > n)
        throw ConfigError("cannot partition " + std::to_string(n) + " samples over " +
                          std::to_string(m) + " clients (m > n)");

    Rng rng(derive_seed(rng_seed, "partition"));
    const double mu = static_cast<double>(n) / m;

    // draw raw sizes, clamp to >= 1
    std::vector<double> raw(m);
    for (int k = 0; k < m; ++k)
        raw[k] = std::max(1.0, rng.normal(mu, mean_fraction_std * mu));

    // rescale so integer sizes sum to exactly n, keeping every size >= 1
    double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    std::vector<size_t> sizes(m);
    size_t assigned = 0;
    for (int k = 0; k < m; ++k) {
        sizes[k] = std::max<size_t>(1, static_cast<size_t>(std::floor(raw[k] * n / total)));
        assigned += sizes[k];
    }
    // distribute the remainder (positive or negative) one sample at a time
    size_t guard = 0;
    while (assigned != n) {
        if (assigned < n) {
            size_t k = assigned % m;
            sizes[k] += 1;
            assigned += 1;
        } else {
            // take from the currently largest partition, never below 1
            size_t k = std::distance(sizes.begin(), std::max_element(sizes.begin(), sizes.end()));
            if (sizes[k] <= 1) throw InternalError("partition rescale underflow");
            sizes[k] -= 1;
            assigned -= 1;
        }
        if (++guard > 4 * n + 16) throw InternalError("partition rescale did not converge");
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<Partition> parts(m);
    size_t pos = 0;
    for (int k = 0; k < m; ++k) {
        parts[k].client_id = k;
        parts[k].sample_indices.assign(order.begin() + pos, order.begin() + pos + sizes[k]);
        pos += sizes[k];
    }
    return parts;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        // trim whitespace
        size_t a = cur.find_first_not_of(" \t\r");
        size_t b = cur.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : cur.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, TaskKind kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);
    auto header = split_csv_line(line);
    int label_col = -1;
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == "label") label_col = static_cast<int>(i);
    if (label_col < 0) throw ConfigError("dataset has no \"label\" column: " + path);

    Dataset ds;
    ds.task_kind = kind;
    ds.d = header.size() - 1;

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        for (size_t i = 0; i < cells.size(); ++i) {
            double v;
            try {
                v = std::stod(cells[i]);
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": non-numeric cell \"" + cells[i] + "\"");
            }
            if (static_cast<int>(i) == label_col)
                ds.labels.push_back(v);
            else
                ds.features.push_back(v);
        }
        ++ds.n;
    }
    if (ds.n == 0) throw ConfigError("dataset has no data rows: " + path);

    // min-max normalize each feature column to [0,1]
    for (size_t j = 0; j < ds.d; ++j) {
        double lo = ds.features[j], hi = ds.features[j];
        for (size_t i = 1; i < ds.n; ++i) {
            double v = ds.features[i * ds.d + j];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double span = hi - lo;
        for (size_t i = 0; i < ds.n; ++i) {
            double& v = ds.features[i * ds.d + j];
            v = span > 0 ? (v - lo) / span : 0.0;
        }
    }

    if (kind == TaskKind::Regression) {
        // shift labels so min = 1; keeps max(y, yhat) > 0 in the accuracy formula
        double lo = *std::min_element(ds.labels.begin(), ds.labels.end());
        if (lo < 1.0)
            for (double& y : ds.labels) y += 1.0 - lo;
    } else if (kind == TaskKind::Classification) {
        double hi = *std::max_element(ds.labels.begin(), ds.labels.end());
        ds.num_classes = static_cast<int>(std::round(hi)) + 1;
    }
    ds.validate();
    return ds;
}

Dataset make_synthetic_regression(size_t n, size_t d, uint64_t seed, double noise) {
    Rng rng(derive_seed(seed, "synth-reg"));
    Dataset ds;
    ds.task_kind = TaskKind::Regression;
    ds.n = n;
    ds.d = d;
    ds.features.resize(n * d);
    ds.labels.resize(n);
    std::vector<double> w_true(d);
    for (size_t j = 0; j < d; ++j) w_true[j] = rng.uniform(0.2, 1.0);
    for (size_t i = 0; i < n; ++i) {
        double y = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double x = rng.uniform();
            ds.features[i * d + j] = x;
            y += w_true[j] * x;
        }
        y += noise * rng.normal(0.0, 1.0);
        ds.labels[i] = std::max(y, 0.0) + 1.0;  // positive targets by construction
    }
    ds.validate();
    return ds;
}

Dataset make_synthetic_classification(size_t n, size_t d, int num_classes, uint64_t seed) {
    Rng rng(derive_seed(seed, "synth-cls"));
    Dataset ds;
    ds.task_kind = TaskKind::Classification;
    ds.n = n;
    ds.d = d;
    ds.num_classes = num_classes;
    ds.features.resize(n * d);
    ds.labels.resize(n);
    // one Gaussian blob per class inside the unit cube
    std::vector<double> centers(static_cast<size_t>(num_classes) * d);
    for (double& c : centers) c = rng.uniform();
    for (size_t i = 0; i < n; ++i) {
        int cls = static_cast<int>(rng.below(num_classes));
        for (size_t j = 0; j < d; ++j) {
            double v = centers[cls * d + j] + rng.normal(0.0, 0.12);
            ds.features[i * d + j] = std::clamp(v, 0.0, 1.0);
        }
        ds.labels[i] = cls;
    }
    ds.validate();
    return ds;
}

Dataset make_synthetic_binary_margin(size_t n, size_t d, uint64_t seed, double noise) {
    Rng rng(derive_seed(seed, "synth-svm"));
    Dataset ds;
    ds.task_kind = TaskKind::BinaryMargin;
    ds.n = n;
    ds.d = d;
    ds.features.resize(n * d);
    ds.labels.resize(n);
    std::vector<double> w_true(d);
    for (size_t j = 0; j < d; ++j) w_true[j] = rng.normal(0.0, 1.0);
    for (size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double x = rng.uniform(-1.0, 1.0);
            ds.features[i * d + j] = x;
            s += w_true[j] * x;
        }
        s += noise * rng.normal(0.0, 1.0);
        ds.labels[i] = s >= 0 ? 1.0 : -1.0;
    }
    ds.validate();
    return ds;
}

}  // namespace safa
