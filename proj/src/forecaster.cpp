#include "pft/forecaster.hpp"

#include "pft/error.hpp"
#include "pft/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pft {

const char* to_string(ModelKind kind) noexcept { return kind == ModelKind::linear_ar ? "linear_ar" : "mlp"; }
const char* to_string(Activation act) noexcept { return act == Activation::tanh ? "tanh" : "relu"; }

ModelKind model_kind_from_string(const std::string& text) {
    if (text == "linear_ar" || text == "linear") return ModelKind::linear_ar;
    if (text == "mlp") return ModelKind::mlp;
    throw ConfigError("unknown model kind '" + text + "'");
}

Activation activation_from_string(const std::string& text) {
    if (text == "tanh") return Activation::tanh;
    if (text == "relu") return Activation::relu;
    throw ConfigError("unknown activation '" + text + "'");
}

Index ModelSpec::parameter_count() const noexcept {
    if (kind == ModelKind::linear_ar) return input_len + 1;
    return hidden * input_len + 2 * hidden + 1;
}

void ModelSpec::validate() const {
    if (input_len < 1) throw ConfigError("model input length must be >= 1");
    if (kind == ModelKind::mlp && hidden < 1) throw ConfigError("mlp hidden size must be >= 1");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
    if (batch_size < 1) throw ConfigError("train.batch must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("train.l2 must be >= 0");
    if (!(fine_tune_lr_factor > 0.0 && fine_tune_lr_factor <= 1.0))
        throw ConfigError("train.ft_lr_factor must lie in (0, 1]");
    if (fine_tune_epochs < 0) throw ConfigError("train.ft_epochs must be >= 0");
}

namespace {

// Views onto the MLP segments of a flat parameter vector.
template <typename Vec>
struct MlpView {
    Eigen::Map<std::conditional_t<std::is_const_v<Vec>, const Eigen::MatrixXd, Eigen::MatrixXd>> w1;
    Eigen::Map<std::conditional_t<std::is_const_v<Vec>, const Eigen::VectorXd, Eigen::VectorXd>> b1;
    Eigen::Map<std::conditional_t<std::is_const_v<Vec>, const Eigen::VectorXd, Eigen::VectorXd>> w2;
    std::conditional_t<std::is_const_v<Vec>, const double&, double&> b2;

    MlpView(Vec& v, Index h, Index p)
        : w1(v.data(), h, p), b1(v.data() + h * p, h), w2(v.data() + h * p + h, h), b2(v.data()[h * p + 2 * h]) {}
};

void check_layout(const WeightVector& w) {
    if (w.values.size() != w.spec.parameter_count())
        throw std::invalid_argument("weight vector length does not match its architecture");
}

void check_inputs(const WeightVector& w, Index cols) {
    check_layout(w);
    if (cols != w.spec.input_len)
        throw std::invalid_argument("input length " + std::to_string(cols) + " does not match model input length " +
                                    std::to_string(w.spec.input_len));
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
    if (act == Activation::tanh) return z.array().tanh().matrix();
    return z.cwiseMax(0.0);
}

Eigen::MatrixXd activate_derivative(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a, Activation act) {
    if (act == Activation::tanh) return (1.0 - a.array().square()).matrix();
    return (z.array() > 0.0).cast<double>().matrix();
}

// Gradient of the mean squared error over rows [inputs, targets] plus the l2 term.
Eigen::VectorXd mse_gradient(const WeightVector& w, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& y, double l2) {
    const auto n = static_cast<double>(y.size());
    Eigen::VectorXd grad(w.values.size());
    const Index p = w.spec.input_len;

    if (w.spec.kind == ModelKind::linear_ar) {
        const auto coef = w.values.head(p);
        const double bias = w.values[p];
        const Eigen::VectorXd e = ((x * coef).array() + bias).matrix() - y;
        grad.head(p) = (2.0 / n) * (x.transpose() * e);
        grad[p] = (2.0 / n) * e.sum();
    } else {
        const Index h = w.spec.hidden;
        const MlpView<const Eigen::VectorXd> m(w.values, h, p);
        const Eigen::MatrixXd z = (x * m.w1.transpose()).rowwise() + m.b1.transpose();
        const Eigen::MatrixXd a = activate(z, w.spec.activation);
        const Eigen::VectorXd g = (2.0 / n) * (((a * m.w2).array() + m.b2).matrix() - y);

        MlpView<Eigen::VectorXd> out(grad, h, p);
        out.w2 = a.transpose() * g;
        out.b2 = g.sum();
        const Eigen::MatrixXd dz = (g * m.w2.transpose()).cwiseProduct(activate_derivative(z, a, w.spec.activation));
        out.w1 = dz.transpose() * x;
        out.b1 = dz.colwise().sum().transpose();
    }
    if (l2 > 0.0) grad += 2.0 * l2 * w.values;
    return grad;
}

// Plain mini-batch gradient descent; the batch order is reshuffled every
// epoch from one RNG seeded once.
TrainResult descend(WeightVector w, const SampleSet& samples, int epochs, double lr, int batch_size, double l2,
                    std::uint64_t seed) {
    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(epochs) + 1);
    result.loss_trace.push_back(loss(w, samples, l2));

    const Index n = samples.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);

    const Index b = std::min<Index>(batch_size, n);
    Eigen::MatrixXd bx(b, samples.inputs.cols());
    Eigen::VectorXd by(b);

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Index start = 0; start < n; start += b) {
            const Index len = std::min(b, n - start);
            for (Index r = 0; r < len; ++r) {
                const Index src = order[static_cast<std::size_t>(start + r)];
                bx.row(r) = samples.inputs.row(src);
                by[r] = samples.targets[src];
            }
            w.values -= lr * mse_gradient(w, bx.topRows(len), by.head(len), l2);
        }
        const double epoch_loss = loss(w, samples, l2);
        if (!std::isfinite(epoch_loss))
            throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        result.loss_trace.push_back(epoch_loss);
    }
    result.weights = std::move(w);
    return result;
}

void check_samples(const SampleSet& samples, const ModelSpec& spec) {
    if (samples.empty()) throw DataError("no training samples");
    if (samples.inputs.rows() != samples.size()) throw std::invalid_argument("sample inputs and targets disagree in count");
    if (samples.inputs.cols() != spec.input_len)
        throw std::invalid_argument("sample window length does not match the model input length");
}

} // namespace

SampleSet sliding_samples(const Eigen::VectorXd& values, IndexRange range, Index p) {
    const Index count = std::max<Index>(0, range.size() - p);
    SampleSet s{Eigen::MatrixXd(count, p), Eigen::VectorXd(count)};
    for (Index i = 0; i < count; ++i) {
        s.inputs.row(i) = values.segment(range.begin + i, p).transpose();
        s.targets[i] = values[range.begin + i + p];
    }
    return s;
}

SampleSet subsequence_samples(const Eigen::VectorXd& values, const std::vector<Subsequence>& members,
                              IndexRange target_range) {
    std::vector<const Subsequence*> kept;
    for (const auto& m : members) {
        const Index target = m.origin + m.values.size();
        if (target < values.size() && target_range.contains(target)) kept.push_back(&m);
    }
    const Index p = members.empty() ? 0 : members.front().values.size();
    SampleSet s{Eigen::MatrixXd(static_cast<Index>(kept.size()), p), Eigen::VectorXd(static_cast<Index>(kept.size()))};
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto r = static_cast<Index>(i);
        s.inputs.row(r) = kept[i]->values.transpose();
        s.targets[r] = values[kept[i]->origin + p];
    }
    return s;
}

WeightVector init(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    WeightVector w{spec, Eigen::VectorXd::Zero(spec.parameter_count())};
    if (spec.kind == ModelKind::linear_ar) return w;

    const Index h = spec.hidden;
    const Index p = spec.input_len;
    Rng rng(seed);
    MlpView<Eigen::VectorXd> m(w.values, h, p);

    const double hidden_limit = std::sqrt(6.0 / static_cast<double>(p + h));
    std::uniform_real_distribution<double> hidden_dist(-hidden_limit, hidden_limit);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < h; ++i) m.w1(i, j) = hidden_dist(rng);

    const double out_limit = std::sqrt(6.0 / static_cast<double>(h + 1));
    std::uniform_real_distribution<double> out_dist(-out_limit, out_limit);
    for (Index i = 0; i < h; ++i) m.w2[i] = out_dist(rng);
    return w;
}

double predict(const WeightVector& weights, const Eigen::Ref<const Eigen::VectorXd>& input) {
    check_inputs(weights, input.size());
    const Index p = weights.spec.input_len;
    if (weights.spec.kind == ModelKind::linear_ar) return weights.values.head(p).dot(input) + weights.values[p];

    const MlpView<const Eigen::VectorXd> m(weights.values, weights.spec.hidden, p);
    const Eigen::VectorXd z = m.w1 * input + m.b1;
    const Eigen::VectorXd a = weights.spec.activation == Activation::tanh ? Eigen::VectorXd(z.array().tanh())
                                                                          : Eigen::VectorXd(z.cwiseMax(0.0));
    return m.w2.dot(a) + m.b2;
}

Eigen::VectorXd predict_batch(const WeightVector& weights, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
    check_inputs(weights, inputs.cols());
    const Index p = weights.spec.input_len;
    if (weights.spec.kind == ModelKind::linear_ar)
        return (inputs * weights.values.head(p)).array() + weights.values[p];

    const MlpView<const Eigen::VectorXd> m(weights.values, weights.spec.hidden, p);
    const Eigen::MatrixXd z = (inputs * m.w1.transpose()).rowwise() + m.b1.transpose();
    return (activate(z, weights.spec.activation) * m.w2).array() + m.b2;
}

double loss(const WeightVector& weights, const SampleSet& samples, double l2) {
    if (samples.empty()) throw DataError("loss of an empty sample set");
    const Eigen::VectorXd residual = predict_batch(weights, samples.inputs) - samples.targets;
    double value = residual.squaredNorm() / static_cast<double>(samples.size());
    if (l2 > 0.0) value += l2 * weights.values.squaredNorm();
    return value;
}

WeightVector gradient(const WeightVector& weights, const SampleSet& samples, double l2) {
    check_samples(samples, weights.spec);
    check_layout(weights);
    return {weights.spec, mse_gradient(weights, samples.inputs, samples.targets, l2)};
}

TrainResult train_traced(const ModelSpec& spec, const TrainConfig& config, const SampleSet& samples) {
    spec.validate();
    config.validate();
    check_samples(samples, spec);

    if (spec.kind == ModelKind::mlp)
        return descend(init(spec, derive_seed(config.seed, seed_stream::base_init)), samples, config.epochs,
                       config.learning_rate, config.batch_size, config.l2,
                       derive_seed(config.seed, seed_stream::base_train));

    // Ridge normal equations over [inputs, 1], matching loss() scaling:
    // (A'A / n + l2 I) theta = A'y / n.
    const Index n = samples.size();
    const Index p = spec.input_len;
    Eigen::MatrixXd a(n, p + 1);
    a.leftCols(p) = samples.inputs;
    a.col(p).setOnes();
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd gram = inv_n * (a.transpose() * a);
    gram.diagonal().array() += config.l2;
    const Eigen::VectorXd rhs = inv_n * (a.transpose() * samples.targets);

    TrainResult result;
    result.loss_trace.push_back(loss(init(spec, config.seed), samples, config.l2));
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    WeightVector w{spec, ldlt.solve(rhs)};
    if (ldlt.info() != Eigen::Success || !w.values.allFinite())
        throw NumericError("ridge normal equations are singular; use l2 > 0");
    result.loss_trace.push_back(loss(w, samples, config.l2));
    result.weights = std::move(w);
    return result;
}

WeightVector train(const ModelSpec& spec, const TrainConfig& config, const SampleSet& samples) {
    return train_traced(spec, config, samples).weights;
}

WeightVector clone_transfer(const WeightVector& weights) { return WeightVector{weights.spec, weights.values}; }

TrainResult fine_tune_traced(const TrainConfig& config, const WeightVector& base, const SampleSet& samples) {
    config.validate();
    check_layout(base);
    check_samples(samples, base.spec);
    return descend(clone_transfer(base), samples, config.fine_tune_epochs,
                   config.learning_rate * config.fine_tune_lr_factor, config.batch_size, config.l2, config.seed);
}

WeightVector fine_tune(const TrainConfig& config, const WeightVector& base, const SampleSet& samples) {
    return fine_tune_traced(config, base, samples).weights;
}

Eigen::VectorXd adaptation_delta(const WeightVector& tuned, const WeightVector& base) {
    if (!(tuned.spec == base.spec)) throw std::invalid_argument("weights belong to different architectures");
    return tuned.values - base.values;
}

} // namespace pft
