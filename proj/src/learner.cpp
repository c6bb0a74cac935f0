#include "safa/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "safa/errors.hpp"

namespace safa {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LinearRegression: return "linear_regression";
        case ModelKind::SoftmaxClassifier: return "softmax_classifier";
        case ModelKind::LinearSVM: return "linear_svm";
    }
    return "?";
}

ModelKind model_kind_for(TaskKind task) {
    switch (task) {
        case TaskKind::Regression: return ModelKind::LinearRegression;
        case TaskKind::Classification: return ModelKind::SoftmaxClassifier;
        case TaskKind::BinaryMargin: return ModelKind::LinearSVM;
    }
    return ModelKind::LinearRegression;
}

void LearnerSpec::validate() const {
    if (!(learning_rate >= 0)) throw ConfigError("learning_rate must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (svm_lambda < 0) throw ConfigError("svm_lambda must be >= 0");
}

size_t model_dim(ModelKind kind, const Dataset& dataset) {
    switch (kind) {
        case ModelKind::LinearRegression:
        case ModelKind::LinearSVM:
            return dataset.d;
        case ModelKind::SoftmaxClassifier:
            if (dataset.num_classes < 2)
                throw ConfigError("softmax classifier needs num_classes >= 2");
            return dataset.d * static_cast<size_t>(dataset.num_classes);
    }
    return 0;
}

namespace {

double dot(const double* a, const double* b, size_t d) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += a[j] * b[j];
    return s;
}

// softmax probabilities for one sample; returns log p[label]
double softmax_probs(std::span<const double> weights, const double* x, size_t d, int K,
                     int label, std::vector<double>& probs) {
    probs.resize(K);
    double zmax = -1e300;
    for (int c = 0; c < K; ++c) {
        probs[c] = dot(weights.data() + static_cast<size_t>(c) * d, x, d);
        zmax = std::max(zmax, probs[c]);
    }
    double sum = 0.0;
    for (int c = 0; c < K; ++c) {
        probs[c] = std::exp(probs[c] - zmax);
        sum += probs[c];
    }
    for (int c = 0; c < K; ++c) probs[c] /= sum;
    return std::log(std::max(probs[label], 1e-300));
}

}  // namespace

void batch_gradient(const LearnerSpec& spec, const Dataset& dataset,
                    std::span<const size_t> batch, std::span<const double> weights,
                    std::span<double> grad_out) {
    const size_t d = dataset.d;
    std::fill(grad_out.begin(), grad_out.end(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    switch (spec.model_kind) {
        case ModelKind::LinearRegression: {
            for (size_t i : batch) {
                const double* x = dataset.row(i);
                double err = dot(weights.data(), x, d) - dataset.labels[i];
                for (size_t j = 0; j < d; ++j) grad_out[j] += inv_b * err * x[j];
            }
            break;
        }
        case ModelKind::SoftmaxClassifier: {
            const int K = dataset.num_classes;
            std::vector<double> probs;
            for (size_t i : batch) {
                const double* x = dataset.row(i);
                int y = static_cast<int>(dataset.labels[i]);
                softmax_probs(weights, x, d, K, y, probs);
                for (int c = 0; c < K; ++c) {
                    double coef = inv_b * (probs[c] - (c == y ? 1.0 : 0.0));
                    double* g = grad_out.data() + static_cast<size_t>(c) * d;
                    for (size_t j = 0; j < d; ++j) g[j] += coef * x[j];
                }
            }
            break;
        }
        case ModelKind::LinearSVM: {
            for (size_t i : batch) {
                const double* x = dataset.row(i);
                double y = dataset.labels[i];
                if (y * dot(weights.data(), x, d) < 1.0)
                    for (size_t j = 0; j < d; ++j) grad_out[j] -= inv_b * y * x[j];
            }
            for (size_t j = 0; j < d; ++j) grad_out[j] += spec.svm_lambda * weights[j];
            break;
        }
    }
}

EvalResult evaluate(const ModelParams& model, const Dataset& dataset, const LearnerSpec& spec) {
    if (dataset.n == 0) throw ConfigError("evaluate: empty dataset");
    const size_t d = dataset.d;
    if (model.dim() != model_dim(spec.model_kind, dataset))
        throw ConfigError("evaluate: model dimension mismatch");

    EvalResult r;
    switch (spec.model_kind) {
        case ModelKind::LinearRegression: {
            for (size_t i = 0; i < dataset.n; ++i) {
                double y = dataset.labels[i];
                double yhat = dot(model.weights.data(), dataset.row(i), d);
                double err = yhat - y;
                r.loss += 0.5 * err * err;
                double denom = std::max(y, yhat);
                r.accuracy += denom != 0.0 ? 1.0 - std::abs(y - yhat) / denom : 0.0;
            }
            break;
        }
        case ModelKind::SoftmaxClassifier: {
            const int K = dataset.num_classes;
            std::vector<double> probs;
            for (size_t i = 0; i < dataset.n; ++i) {
                int y = static_cast<int>(dataset.labels[i]);
                r.loss -= softmax_probs(model.weights, dataset.row(i), d, K, y, probs);
                int argmax = static_cast<int>(
                    std::max_element(probs.begin(), probs.end()) - probs.begin());
                if (argmax == y) r.accuracy += 1.0;
            }
            break;
        }
        case ModelKind::LinearSVM: {
            double w2 = 0.0;
            for (double w : model.weights) w2 += w * w;
            for (size_t i = 0; i < dataset.n; ++i) {
                double y = dataset.labels[i];
                double yhat = dot(model.weights.data(), dataset.row(i), d);
                r.loss += std::max(0.0, 1.0 - y * yhat);
                double prod = y * yhat;
                double sign = prod > 0 ? 1.0 : (prod < 0 ? -1.0 : 0.0);
                r.accuracy += std::max(0.0, sign);
            }
            r.loss += dataset.n * 0.5 * spec.svm_lambda * w2;
            break;
        }
    }
    r.loss /= static_cast<double>(dataset.n);
    r.accuracy /= static_cast<double>(dataset.n);
    return r;
}

ModelParams client_update_stream(int client_id, const ModelParams& start,
                                 const Partition& partition, const Dataset& dataset,
                                 const LearnerSpec& spec, Rng& rng, int round_for_error) {
    spec.validate();
    if (start.dim() != model_dim(spec.model_kind, dataset))
        throw ConfigError("client_update: model dimension mismatch for client " +
                          std::to_string(client_id));
    if (partition.size() == 0)
        throw ConfigError("client_update: empty partition for client " +
                          std::to_string(client_id));

    ModelParams model = start;
    std::vector<double> grad(model.dim());
    std::vector<size_t> order = partition.sample_indices;
    const size_t B = static_cast<size_t>(spec.batch_size);

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t pos = 0; pos < order.size(); pos += B) {
            size_t len = std::min(B, order.size() - pos);  // last batch may be smaller
            batch_gradient(spec, dataset, {order.data() + pos, len}, model.weights, grad);
            for (size_t j = 0; j < model.dim(); ++j)
                model.weights[j] -= spec.learning_rate * grad[j];
        }
    }
    if (!model.all_finite())
        throw NumericDivergence("client " + std::to_string(client_id) + " diverged at round " +
                                std::to_string(round_for_error));
    return model;  // version stamp unchanged
}

ModelParams client_update(int client_id, const ModelParams& start, const Partition& partition,
                          const Dataset& dataset, const LearnerSpec& spec, uint64_t rng_seed,
                          int round_for_error) {
    Rng rng(rng_seed);
    return client_update_stream(client_id, start, partition, dataset, spec, rng, round_for_error);
}

}  // namespace safa
