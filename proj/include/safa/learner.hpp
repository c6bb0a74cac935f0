#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "safa/data.hpp"
#include "safa/model.hpp"
#include "safa/rng.hpp"

namespace safa {

enum class ModelKind { LinearRegression, SoftmaxClassifier, LinearSVM };

std::string to_string(ModelKind k);
ModelKind model_kind_for(TaskKind task);

struct LearnerSpec {
    ModelKind model_kind = ModelKind::LinearRegression;
    double learning_rate = 1e-2;
    int epochs = 1;
    int batch_size = 1;
    double svm_lambda = 1e-4;  // L2 coefficient, LinearSVM only

    void validate() const;
};

// LinearRegression: d weights, f = 1/2 (w.x - y)^2
// SoftmaxClassifier: K*d weights row-major, f = -log softmax(Wx)[y]
// LinearSVM: d weights, f = max(0, 1 - y w.x) + lambda/2 |w|^2
size_t model_dim(ModelKind kind, const Dataset& dataset);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Loss is the training objective averaged per sample; accuracy follows the
// task formulas: regression 1 - mean(|y-yhat| / max(y,yhat)), classification
// exact-match, binary margin mean(max(0, sign(y*yhat))) with sign(0) = 0.
EvalResult evaluate(const ModelParams& model, const Dataset& dataset, const LearnerSpec& spec);

// Mean gradient of the training objective over the given sample indices.
void batch_gradient(const LearnerSpec& spec, const Dataset& dataset,
                    std::span<const size_t> batch, std::span<const double> weights,
                    std::span<double> grad_out);

// E epochs of mini-batch SGD over the partition; batch order comes from the
// supplied stream, so chained calls compose exactly like one longer run.
// Version stamp of the input model is preserved.
ModelParams client_update_stream(int client_id, const ModelParams& start,
                                 const Partition& partition, const Dataset& dataset,
                                 const LearnerSpec& spec, Rng& rng, int round_for_error = -1);

// Seeded entry point used by the protocols; one stream per (seed).
ModelParams client_update(int client_id, const ModelParams& start, const Partition& partition,
                          const Dataset& dataset, const LearnerSpec& spec, uint64_t rng_seed,
                          int round_for_error = -1);

}  // namespace safa
