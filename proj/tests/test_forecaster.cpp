#include "pft/error.hpp"
#include "pft/forecaster.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

using namespace pft;

namespace {

ModelSpec linear_spec(Index p) { return {ModelKind::linear_ar, p, 0, Activation::tanh}; }
ModelSpec mlp_spec(Index p, Index h, Activation a = Activation::tanh) { return {ModelKind::mlp, p, h, a}; }

SampleSet random_samples(Index n, Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    SampleSet s{Eigen::MatrixXd(n, p), Eigen::VectorXd(n)};
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) s.inputs(i, j) = g(rng);
        s.targets[i] = g(rng);
    }
    return s;
}

WeightVector random_weights(const ModelSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    WeightVector w{spec, Eigen::VectorXd(spec.parameter_count())};
    for (Index i = 0; i < w.size(); ++i) w.values[i] = g(rng);
    return w;
}

} // namespace

TEST(ModelSpec, ParameterCounts) {
    EXPECT_EQ(linear_spec(10).parameter_count(), 11);
    EXPECT_EQ(mlp_spec(10, 8).parameter_count(), 8 * 10 + 8 + 8 + 1);
    EXPECT_THROW(mlp_spec(10, 0).validate(), ConfigError);
    EXPECT_THROW(linear_spec(0).validate(), ConfigError);
    EXPECT_EQ(model_kind_from_string("mlp"), ModelKind::mlp);
    EXPECT_EQ(activation_from_string(to_string(Activation::relu)), Activation::relu);
    EXPECT_THROW((void)model_kind_from_string("lstm"), ConfigError);
}

TEST(Init, LinearIsZero) {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        const auto w = init(linear_spec(10), seed);
        EXPECT_EQ(w.size(), 11);
        EXPECT_TRUE(w.values.isZero(0.0));
    }
}

TEST(Init, MlpDeterministicZeroBiases) {
    const auto spec = mlp_spec(10, 8);
    const auto a = init(spec, 3);
    EXPECT_EQ(a, init(spec, 3));
    EXPECT_NE(a.values, init(spec, 4).values);
    EXPECT_TRUE(a.values.segment(80, 8).isZero(0.0));
    EXPECT_EQ(a.values[a.size() - 1], 0.0);
    const double limit = std::sqrt(6.0 / 11.0);
    EXPECT_LE(a.values.head(80).cwiseAbs().maxCoeff(), limit);
}

TEST(Predict, HandComputed) {
    const auto spec = linear_spec(10);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, -1.0, 2.0);
    EXPECT_EQ(predict(init(spec, 0), x), 0.0);
    WeightVector w{spec, Eigen::VectorXd::Zero(11)};
    w.values[9] = 0.5;
    EXPECT_DOUBLE_EQ(predict(w, x), 1.0);
    w.values[10] = 0.25;
    EXPECT_DOUBLE_EQ(predict(w, x), 1.25);
    const auto mspec = mlp_spec(10, 4);
    EXPECT_EQ(predict(WeightVector{mspec, Eigen::VectorXd::Zero(mspec.parameter_count())}, x), 0.0);
}

TEST(Predict, BatchMatchesSingle) {
    const auto w = random_weights(mlp_spec(6, 5, Activation::relu), 1);
    const auto s = random_samples(40, 6, 2);
    const auto batch = predict_batch(w, s.inputs);
    for (Index i = 0; i < 40; ++i) EXPECT_NEAR(batch[i], predict(w, s.inputs.row(i).transpose()), 1e-13);
    EXPECT_THROW((void)predict(w, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST(Loss, Examples) {
    const auto spec = linear_spec(1);
    SampleSet one{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1)};
    WeightVector w{spec, Eigen::Vector2d(0.0, 1.0)};
    EXPECT_DOUBLE_EQ(loss(w, one), 1.0);
    one.targets[0] = 1.0;
    EXPECT_DOUBLE_EQ(loss(w, one), 0.0);
    EXPECT_DOUBLE_EQ(loss(w, one, 0.5), 0.5);
}

TEST(Gradient, MatchesFiniteDifferences) {
    for (const auto& spec : {linear_spec(5), mlp_spec(5, 4, Activation::tanh), mlp_spec(5, 4, Activation::relu)}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto w = random_weights(spec, 100 + seed);
            const auto s = random_samples(12, 5, 200 + seed);
            const auto g = gradient(w, s, 1e-3);
            for (Index i = 0; i < w.size(); ++i) {
                auto plus = w, minus = w;
                plus.values[i] += 1e-6;
                minus.values[i] -= 1e-6;
                const double fd = (loss(plus, s, 1e-3) - loss(minus, s, 1e-3)) / 2e-6;
                EXPECT_NEAR(g.values[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << to_string(spec.kind) << " " << i;
            }
        }
    }
}

TEST(Gradient, DeadReluNetworkIsZero) {
    const auto spec = mlp_spec(4, 3, Activation::relu);
    const WeightVector w{spec, Eigen::VectorXd::Zero(spec.parameter_count())};
    SampleSet s = random_samples(10, 4, 1);
    s.targets.setZero();
    EXPECT_TRUE(gradient(w, s).values.isZero(0.0));
}

TEST(Train, LinearRecoversArCoefficient) {
    // noise-free x_{t+1} = 0.5 x_t from random starting windows
    SampleSet s = random_samples(200, 3, 21);
    s.targets = 0.5 * s.inputs.col(2);
    TrainConfig cfg;
    cfg.l2 = 1e-8;
    const auto w = train(linear_spec(3), cfg, s);
    EXPECT_NEAR(w.values[2], 0.5, 1e-6);
    EXPECT_NEAR(w.values[0], 0.0, 1e-6);
    EXPECT_NEAR(w.values[1], 0.0, 1e-6);
    EXPECT_NEAR(w.values[3], 0.0, 1e-6);
    EXPECT_LT(gradient(w, s, cfg.l2).values.norm(), 1e-8);
}

TEST(Train, LinearMatchesNormalEquationsOracle) {
    const auto s = random_samples(50, 4, 8);
    TrainConfig cfg;
    cfg.l2 = 0.01;
    const auto w = train(linear_spec(4), cfg, s);
    Eigen::MatrixXd X(50, 5);
    X << s.inputs, Eigen::VectorXd::Ones(50);
    const Eigen::MatrixXd A = X.transpose() * X / 50.0 + cfg.l2 * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::VectorXd theta = A.ldlt().solve(X.transpose() * s.targets / 50.0);
    EXPECT_LT((w.values - theta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Train, MlpLearnsConstant) {
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(200, 0.7);
    const auto samples = sliding_samples(v, {0, 200}, 10);
    TrainConfig cfg;
    const auto w = train(mlp_spec(10, 16), cfg, samples);
    EXPECT_NEAR(predict(w, v.head(10)), 0.7, 1e-3);
}

TEST(Train, DeterministicForSeed) {
    const auto s = random_samples(64, 5, 4);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 17;
    EXPECT_EQ(train(mlp_spec(5, 6), cfg, s), train(mlp_spec(5, 6), cfg, s));
    const auto traced = train_traced(mlp_spec(5, 6), cfg, s);
    EXPECT_EQ(traced.loss_trace.size(), 21u);
    EXPECT_LT(traced.loss_trace.back(), traced.loss_trace.front());
}

TEST(Train, ConfigValidation) {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.fine_tune_lr_factor = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_THROW((void)train(linear_spec(3), TrainConfig{}, SampleSet{}), DataError);
}

TEST(CloneTransfer, IdentityAndIndependence) {
    const auto base = random_weights(mlp_spec(8, 5), 3);
    auto copy = clone_transfer(base);
    const auto s = random_samples(100, 8, 5);
    const Eigen::VectorXd before = predict_batch(base, s.inputs);
    EXPECT_EQ(predict_batch(copy, s.inputs), before);
    copy.values.array() += 1.0;
    EXPECT_EQ(predict_batch(base, s.inputs), before);
}

TEST(FineTune, ZeroEpochsIsIdentity) {
    const auto base = random_weights(mlp_spec(8, 5), 6);
    TrainConfig cfg;
    cfg.fine_tune_epochs = 0;
    const auto tuned = fine_tune(cfg, base, random_samples(10, 8, 1));
    EXPECT_EQ(tuned, base);
    EXPECT_TRUE(adaptation_delta(tuned, base).isZero(0.0));
}

TEST(FineTune, LinearLossNonIncreasing) {
    const auto s = random_samples(30, 4, 12);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.fine_tune_lr_factor = 1.0;
    cfg.fine_tune_epochs = 100;
    cfg.batch_size = 64;
    const auto r = fine_tune_traced(cfg, WeightVector{linear_spec(4), Eigen::VectorXd::Zero(5)}, s);
    ASSERT_EQ(r.loss_trace.size(), 101u);
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i) EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1] + 1e-15);
}

TEST(FineTune, DistinctRegimesGiveDistinctSpecialists) {
    auto regime = [](double a, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 0.1);
        Eigen::VectorXd v(200);
        v[0] = 0.5;
        for (Index i = 1; i < 200; ++i) v[i] = a * v[i - 1] + g(rng);
        return sliding_samples(v, {0, 200}, 2);
    };
    TrainConfig cfg;
    cfg.learning_rate = 0.2;
    cfg.fine_tune_lr_factor = 1.0;
    cfg.fine_tune_epochs = 300;
    const WeightVector base{linear_spec(2), Eigen::VectorXd::Zero(3)};
    const auto a = fine_tune(cfg, base, regime(0.9, 1));
    const auto b = fine_tune(cfg, base, regime(-0.6, 2));
    EXPECT_GT((a.values.head(2) - b.values.head(2)).cwiseAbs().maxCoeff(), 0.1);
    EXPECT_EQ(adaptation_delta(a, base), a.values - base.values);
}

TEST(Samples, SlidingAndSubsequence) {
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(30, 0, 29);
    const auto s = sliding_samples(v, {5, 20}, 4);
    ASSERT_EQ(s.size(), 11);
    EXPECT_EQ(s.inputs.row(0), v.segment(5, 4).transpose());
    EXPECT_EQ(s.targets[0], 9.0);
    EXPECT_EQ(s.targets[10], 19.0);
    const std::vector<Subsequence> members{{v.segment(0, 4), 0}, {v.segment(16, 4), 16}};
    const auto m = subsequence_samples(v, members, {0, 20});
    ASSERT_EQ(m.size(), 1);
    EXPECT_EQ(m.targets[0], 4.0);
}
