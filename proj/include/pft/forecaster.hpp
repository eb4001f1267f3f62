#pragma once

#include "pft/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace pft {

enum class ModelKind { linear_ar, mlp };
enum class Activation { tanh, relu };

const char* to_string(ModelKind kind) noexcept;
const char* to_string(Activation act) noexcept;
ModelKind model_kind_from_string(const std::string& text);
Activation activation_from_string(const std::string& text);

/// Architecture descriptor. `hidden` and `activation` only apply to the MLP.
struct ModelSpec {
    ModelKind kind = ModelKind::mlp;
    Index input_len = 10;
    Index hidden = 16;
    Activation activation = Activation::tanh;

    /// linear_ar: p weights then the bias.
    /// mlp: hidden x p input weights (column-major), hidden biases,
    /// hidden output weights, output bias.
    [[nodiscard]] Index parameter_count() const noexcept;
    void validate() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Flat parameter vector tagged with the architecture it belongs to.
struct WeightVector {
    ModelSpec spec;
    Eigen::VectorXd values;

    [[nodiscard]] Index size() const noexcept { return values.size(); }
    friend bool operator==(const WeightVector& a, const WeightVector& b) {
        return a.spec == b.spec && a.values.size() == b.values.size() && a.values == b.values;
    }
};

/// Supervised pairs in row form: inputs(i, :) is a length-p window and
/// targets(i) the observation that follows it.
struct SampleSet {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd targets;

    [[nodiscard]] Index size() const noexcept { return targets.size(); }
    [[nodiscard]] bool empty() const noexcept { return targets.size() == 0; }
};

/// All stride-1 windows of `range` whose target also lies in `range`.
SampleSet sliding_samples(const Eigen::VectorXd& values, IndexRange range, Index p);

/// One sample per subsequence: its window paired with the observation right
/// after it. Subsequences whose target index falls outside `target_range`
/// are dropped.
SampleSet subsequence_samples(const Eigen::VectorXd& values, const std::vector<Subsequence>& members,
                              IndexRange target_range);

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 0.01;
    int batch_size = 32;
    double l2 = 1e-6;
    std::uint64_t seed = 0;
    double fine_tune_lr_factor = 0.1;
    int fine_tune_epochs = 50;

    void validate() const;
};

/// Weights plus the full-sample loss before training and after every epoch.
struct TrainResult {
    WeightVector weights;
    std::vector<double> loss_trace;
};

/// Zero weights for linear_ar. For the MLP, Glorot-uniform weights and zero
/// biases; deterministic for a fixed seed.
WeightVector init(const ModelSpec& spec, std::uint64_t seed);

double predict(const WeightVector& weights, const Eigen::Ref<const Eigen::VectorXd>& input);
Eigen::VectorXd predict_batch(const WeightVector& weights, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// Mean squared error plus l2 * ||theta||^2.
double loss(const WeightVector& weights, const SampleSet& samples, double l2 = 0.0);

/// Analytic gradient of `loss` with respect to every parameter.
WeightVector gradient(const WeightVector& weights, const SampleSet& samples, double l2 = 0.0);

/// Base training. linear_ar solves the ridge normal equations exactly; the
/// MLP runs mini-batch gradient descent with a seeded shuffle.
WeightVector train(const ModelSpec& spec, const TrainConfig& config, const SampleSet& samples);
TrainResult train_traced(const ModelSpec& spec, const TrainConfig& config, const SampleSet& samples);

/// Independent copy of the base weights; the starting point of every specialist.
WeightVector clone_transfer(const WeightVector& weights);

/// Gradient descent from clone_transfer(base) for fine_tune_epochs at
/// learning_rate * fine_tune_lr_factor. Applies to both model kinds.
WeightVector fine_tune(const TrainConfig& config, const WeightVector& base, const SampleSet& samples);
TrainResult fine_tune_traced(const TrainConfig& config, const WeightVector& base, const SampleSet& samples);

/// theta_k - theta_base.
Eigen::VectorXd adaptation_delta(const WeightVector& tuned, const WeightVector& base);

} // namespace pft
