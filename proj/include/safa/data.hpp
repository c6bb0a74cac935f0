#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace safa {

enum class TaskKind { Regression, Classification, BinaryMargin };

std::string to_string(TaskKind k);

// Row-major dense dataset. For Classification labels are class ids in
// [0, num_classes); for BinaryMargin labels are exactly -1 or +1.
struct Dataset {
    std::vector<double> features;  // n x d, row-major
    std::vector<double> labels;    // length n
    size_t n = 0;
    size_t d = 0;
    TaskKind task_kind = TaskKind::Regression;
    int num_classes = 0;  // Classification only

    const double* row(size_t i) const { return features.data() + i * d; }

    void validate() const;
};

struct Partition {
    int client_id = 0;
    std::vector<size_t> sample_indices;

    size_t size() const { return sample_indices.size(); }
};

// Gaussian-size partitioning: sizes drawn from N(mu, (std_frac*mu)^2) with
// mu = n/m, clamped to >= 1 and rescaled to sum exactly n; index assignment
// is a seeded shuffle. Rejects m > n.
std::vector<Partition> partition_dataset(const Dataset& dataset, int m,
                                         double mean_fraction_std, uint64_t rng_seed);

// CSV loader: header row, one column named "label", remaining columns are
// numeric features. Features are min-max normalized to [0,1]; regression
// labels are shifted so min(label) = 1, keeping the accuracy formula's
// denominator positive.
Dataset load_csv_dataset(const std::string& path, TaskKind kind);

// Seeded synthetic datasets shaped like the three evaluation tasks.
Dataset make_synthetic_regression(size_t n, size_t d, uint64_t seed, double noise = 0.05);
Dataset make_synthetic_classification(size_t n, size_t d, int num_classes, uint64_t seed);
Dataset make_synthetic_binary_margin(size_t n, size_t d, uint64_t seed, double noise = 0.1);

}  // namespace safa
