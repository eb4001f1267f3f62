#include "pft/error.hpp"
#include "pft/pool.hpp"
#include "pft/serialization.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

using namespace pft;

namespace {

constexpr Index p = 5;

ModelSpec linear_spec() { return {ModelKind::linear_ar, p, 0, Activation::tanh}; }

// Two noisy plateaus in scaled units: [0, 200) near 0.2, [200, 400) near 0.8.
Eigen::VectorXd two_regimes(std::uint64_t seed, double sd = 0.02) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sd);
    Eigen::VectorXd v(400);
    for (Index i = 0; i < 400; ++i) v[i] = (i < 200 ? 0.2 : 0.8) + g(rng);
    return v;
}

WeightVector base_for(const Eigen::VectorXd& v) {
    TrainConfig cfg;
    return train(linear_spec(), cfg, sliding_samples(v, {0, v.size()}, p));
}

TrainConfig tune_config(int epochs = 50) {
    TrainConfig t;
    t.learning_rate = 0.1;
    t.fine_tune_lr_factor = 1.0;
    t.fine_tune_epochs = epochs;
    t.seed = 3;
    return t;
}

SpecialistPool manual_pool(const std::vector<Eigen::VectorXd>& centroids, double tau = 0.1) {
    SpecialistPool pool;
    pool.spec = {ModelKind::linear_ar, centroids.front().size(), 0, Activation::tanh};
    pool.base_weights = WeightVector{pool.spec, Eigen::VectorXd::Zero(pool.spec.parameter_count())};
    for (const auto& c : centroids) {
        Specialist s;
        s.id = pool.next_id++;
        s.centroid = c;
        s.weights = pool.base_weights;
        s.weights.values[s.weights.size() - 1] = static_cast<double>(s.id);  // bias identifies the specialist
        pool.specialists.push_back(s);
    }
    pool.tau = tau;
    return pool;
}

} // namespace

TEST(RecentBuffer, FifoWithCapacity) {
    RecentBuffer b(4);
    for (int i = 0; i < 6; ++i) b.push(i);
    EXPECT_EQ(b.size(), 4);
    EXPECT_EQ(b.tail(), Eigen::Vector4d(2, 3, 4, 5));
    EXPECT_EQ(b.tail(2), Eigen::Vector2d(4, 5));
}

TEST(BuildOffline, TwoRegimesTwoSpecialists) {
    const auto v = two_regimes(1);
    const auto base = base_for(v);
    ClusterConfig cc;
    Clustering clustering;
    const auto pool = build_offline(base, v, {0, 400}, tune_config(), cc, PoolConfig{}, &clustering);
    ASSERT_EQ(pool.size(), 2);
    std::vector<double> means{pool.specialists[0].centroid.mean(), pool.specialists[1].centroid.mean()};
    std::sort(means.begin(), means.end());
    const double tol = 3 * 0.02 / std::sqrt(200.0 / p) * 2;
    EXPECT_NEAR(means[0], 0.2, std::max(tol, 0.01));
    EXPECT_NEAR(means[1], 0.8, std::max(tol, 0.01));
    EXPECT_NEAR(pool.tau, 0.2 * inter_cluster_distance(pool.centroids()), 1e-12);
    EXPECT_EQ(pool.recent.capacity(), 10 * p);
    std::set<int> ids;
    for (const auto& s : pool.specialists) {
        ids.insert(s.id);
        EXPECT_FALSE(s.created_at.has_value());
        EXPECT_GT(s.train_count, 0);
    }
    EXPECT_EQ(ids.size(), 2u);
}

TEST(BuildOffline, ZeroEpochSpecialistsEqualBase) {
    const auto v = two_regimes(2);
    const auto base = base_for(v);
    const auto pool = build_offline(base, v, {0, 400}, tune_config(0), ClusterConfig{}, PoolConfig{});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd w(p);
        for (Index j = 0; j < p; ++j) w[j] = u(rng);
        EXPECT_EQ(forecast(pool, w), predict(base, w));
    }
}

TEST(BuildOffline, TauIsFractionOfMeanInterClusterDistance) {
    // three plateaus whose centroids are pairwise d, d, 2d apart with mean 5
    const double step = 15.0 / (4.0 * std::sqrt(static_cast<double>(p)));
    Eigen::VectorXd v(300);
    for (Index i = 0; i < 300; ++i) v[i] = (i < 100 ? 0.0 : i < 200 ? step : 2 * step) + 1e-4 * ((i * 7) % 3 - 1);
    ClusterConfig cc;
    cc.xmeans.k_min = 3;
    cc.xmeans.k_max = 3;
    const auto pool = build_offline(base_for(v), v, {0, 300}, tune_config(0), cc, PoolConfig{});
    ASSERT_EQ(pool.size(), 3);
    EXPECT_NEAR(inter_cluster_distance(pool.centroids()), 5.0, 1e-3);
    EXPECT_NEAR(pool.tau, 1.0, 1e-3);
}

TEST(Select, Geometry) {
    const auto pool = manual_pool({Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)});
    const auto a = select(pool, Eigen::Vector2d(0.1, 0.1));
    EXPECT_EQ(a.id, 0);
    EXPECT_NEAR(a.distance, std::sqrt(0.02), 1e-15);
    const auto exact = select(pool, Eigen::Vector2d(1, 1));
    EXPECT_EQ(exact.id, 1);
    EXPECT_EQ(exact.distance, 0.0);
    EXPECT_EQ(select(pool, Eigen::Vector2d(0.5, 0.5)).id, 0);
    const SpecialistPool empty;
    EXPECT_THROW((void)select(empty, Eigen::Vector2d(0, 0)), std::logic_error);
}

TEST(Select, OptimalOverRandomFixtures) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int f = 0; f < 20; ++f) {
        std::vector<Eigen::VectorXd> cs;
        for (int k = 0; k < 6; ++k) cs.push_back(Eigen::Vector3d(g(rng), g(rng), g(rng)));
        const auto pool = manual_pool(cs);
        for (int t = 0; t < 20; ++t) {
            const Eigen::Vector3d w(g(rng), g(rng), g(rng));
            const auto s = select(pool, w);
            for (const auto& c : cs) EXPECT_LE(s.distance, (c - w).norm() + 1e-15);
            EXPECT_EQ(forecast(pool, w), static_cast<double>(s.id));
        }
    }
}

TEST(Adapt, ExistingRegimeIsFused) {
    const auto v = two_regimes(3);
    auto pool = build_offline(base_for(v), v, {0, 400}, tune_config(), ClusterConfig{}, PoolConfig{});
    const auto fresh = two_regimes(4);
    const Eigen::VectorXd recent = fresh.segment(50, 50);
    const auto r = adapt(pool, recent, AdaptTrigger::drift, 0, tune_config(), ClusterConfig{});
    EXPECT_TRUE(r.new_specialists.empty());
    EXPECT_EQ(r.fused, r.recluster_k);
    EXPECT_EQ(pool.size(), 2);
}

TEST(Adapt, LevelShiftSpawnsAndIsIdempotent) {
    const auto v = two_regimes(5);
    auto pool = build_offline(base_for(v), v, {0, 400}, tune_config(), ClusterConfig{}, PoolConfig{});
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 0.02);
    Eigen::VectorXd recent(50);
    for (Index i = 0; i < 50; ++i) recent[i] = 2.0 + g(rng);
    const auto r = adapt(pool, recent, AdaptTrigger::drift, 17, tune_config(), ClusterConfig{});
    ASSERT_GE(r.new_specialists.size(), 1u);
    const auto& s = pool.by_id(r.new_specialists.front());
    EXPECT_NEAR(s.centroid.mean(), 2.0, 0.05);
    EXPECT_EQ(s.created_at, Index{17});
    EXPECT_NEAR(pool.tau, 0.2 * inter_cluster_distance(pool.centroids()), 1e-9);

    // replaying the logged fine-tune reproduces the weights bit-exactly
    for (const auto& rec : r.spawned) {
        TrainConfig ft = tune_config();
        ft.seed = rec.seed;
        EXPECT_EQ(fine_tune(ft, pool.base_weights, rec.samples), pool.by_id(rec.id).weights);
    }

    const Index before = pool.size();
    const auto again = adapt(pool, recent, AdaptTrigger::periodic, 18, tune_config(), ClusterConfig{});
    EXPECT_TRUE(again.new_specialists.empty());
    EXPECT_EQ(pool.size(), before);
    EXPECT_EQ(again.trigger, AdaptTrigger::periodic);
}

TEST(Adapt, ShortBufferIsSkipped) {
    auto pool = manual_pool({Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)});
    const auto r = adapt(pool, Eigen::VectorXd::Zero(2 * p - 1), AdaptTrigger::drift, 0, tune_config(), ClusterConfig{});
    EXPECT_TRUE(r.skipped);
    EXPECT_EQ(pool.size(), 2);
}

TEST(Adapt, PoolNeverShrinksAndRespectsMaxSize) {
    auto pool = manual_pool({Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)}, 0.01);
    pool.max_size = 3;
    Index last = pool.size();
    bool aborted = false;
    for (int k = 0; k < 5 && !aborted; ++k) {
        const Eigen::VectorXd recent = Eigen::VectorXd::Constant(4 * p, 3.0 + 2.0 * k);
        try {
            (void)adapt(pool, recent, AdaptTrigger::drift, k, tune_config(5), ClusterConfig{});
        } catch (const Error&) {
            aborted = true;
        }
        EXPECT_GE(pool.size(), last);
        last = pool.size();
    }
    EXPECT_TRUE(aborted);
    EXPECT_EQ(pool.size(), 3);
}

TEST(PoolJson, RoundTrip) {
    const auto v = two_regimes(7);
    auto pool = build_offline(base_for(v), v, {0, 400}, tune_config(), ClusterConfig{}, PoolConfig{});
    for (Index i = 0; i < 20; ++i) pool.recent.push(0.1 * i);
    const auto path = std::filesystem::temp_directory_path() / "pft_test_pool.json";
    save_pool(pool, path);
    const auto loaded = load_pool(path);
    ASSERT_EQ(loaded.size(), pool.size());
    EXPECT_EQ(loaded.tau, pool.tau);
    EXPECT_EQ(loaded.base_weights, pool.base_weights);
    for (Index i = 0; i < pool.size(); ++i) {
        EXPECT_EQ(loaded.specialists[i].weights, pool.specialists[i].weights);
        EXPECT_EQ(loaded.specialists[i].centroid, pool.specialists[i].centroid);
        EXPECT_EQ(loaded.specialists[i].id, pool.specialists[i].id);
    }
    const Eigen::VectorXd w = v.segment(100, p);
    EXPECT_EQ(forecast(loaded, w), forecast(pool, w));
}
