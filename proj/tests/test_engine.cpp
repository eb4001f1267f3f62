#include "pft/config.hpp"
#include "pft/engine.hpp"
#include "pft/error.hpp"
#include "pft/random.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace pft;

namespace {

TimeSeries fixture(std::uint64_t seed, Index length = 1000) {
    SyntheticSpec spec;
    Regime sine{RegimeKind::sine, length / 2};
    sine.amplitude = 1.0;
    sine.period = 25.0;
    Regime trend{RegimeKind::linear_trend, length / 2};
    trend.level = 2.0;
    trend.slope = -0.004;
    spec.regimes = {sine, trend, sine, trend};
    for (auto& r : spec.regimes) r.length = length / 4;
    spec.noise_sd = 0.05;
    spec.seed = seed;
    return make_synthetic(spec);
}

StrategyConfig quick(Strategy s, ModelKind kind = ModelKind::linear_ar) {
    StrategyConfig c;
    c.strategy = s;
    c.model.kind = kind;
    c.model.hidden = 8;
    c.train.epochs = 30;
    c.train.fine_tune_epochs = 20;
    c.seed = 5;
    return c;
}

} // namespace

TEST(Strategy, Strings) {
    for (auto s : {Strategy::base, Strategy::offline_tune, Strategy::online_tune, Strategy::periodic_tune})
        EXPECT_EQ(strategy_from_string(to_string(s)), s);
    EXPECT_EQ(strategy_from_string("online"), Strategy::online_tune);
    EXPECT_THROW((void)strategy_from_string("sometimes"), ConfigError);
    EXPECT_EQ(d_ref_mode_from_string(to_string(DRefMode::first_value)), DRefMode::first_value);
}

TEST(StrategyConfig, Validation) {
    auto c = quick(Strategy::periodic_tune);
    c.periodic_fraction = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = quick(Strategy::online_tune);
    c.detector.gamma = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Run, BaseForecastsEveryStepWithoutEvents) {
    const auto ts = fixture(1);
    const auto sp = split(ts, {}, 10);
    ASSERT_EQ(sp.test.size(), 200);
    const auto t = run(ts, sp, quick(Strategy::base));
    ASSERT_EQ(t.forecasts.size(), 200u);
    EXPECT_TRUE(t.events.empty());
    for (std::size_t i = 0; i < t.forecasts.size(); ++i) {
        EXPECT_EQ(t.forecasts[i].specialist, -1);
        EXPECT_EQ(t.forecasts[i].step, static_cast<Index>(i) + 1);
        EXPECT_EQ(t.forecasts[i].index, sp.test.begin + static_cast<Index>(i));
        EXPECT_EQ(t.forecasts[i].actual, ts.values[t.forecasts[i].index]);
    }
    EXPECT_EQ(t.timings.adaptation_seconds, 0.0);
}

TEST(Run, PeriodicAdaptsOnSchedule) {
    const auto ts = fixture(2);
    const auto t = run(ts, split(ts, {}, 10), quick(Strategy::periodic_tune));
    std::vector<Index> steps;
    for (const auto& e : t.events) {
        EXPECT_EQ(e.kind, EventKind::adaptation);
        EXPECT_EQ(e.trigger, AdaptTrigger::periodic);
        steps.push_back(e.step);
    }
    EXPECT_EQ(steps, (std::vector<Index>{20, 40, 60, 80, 100, 120, 140, 160, 180, 200}));
    EXPECT_EQ(t.drift_count(), 0);
}

TEST(Run, OfflineHasNoAdaptationTime) {
    const auto ts = fixture(3);
    const auto t = run(ts, split(ts, {}, 10), quick(Strategy::offline_tune));
    EXPECT_TRUE(t.events.empty());
    EXPECT_EQ(t.timings.adaptation_seconds, 0.0);
    for (const auto& f : t.forecasts) EXPECT_GE(f.specialist, 0);
}

TEST(Run, DisabledDetectionMatchesOffline) {
    const auto ts = fixture(4);
    const auto sp = split(ts, {}, 10);
    auto on = quick(Strategy::online_tune, ModelKind::mlp);
    on.detector.enabled = false;
    const auto traces = run_all(ts, sp, {quick(Strategy::offline_tune, ModelKind::mlp), on});
    EXPECT_EQ(traces[0].predictions(), traces[1].predictions());
    EXPECT_TRUE(traces[1].events.empty());
}

TEST(Run, ZeroEpochOfflineMatchesBase) {
    const auto ts = fixture(5);
    const auto sp = split(ts, {}, 10);
    auto base = quick(Strategy::base, ModelKind::mlp);
    auto off = quick(Strategy::offline_tune, ModelKind::mlp);
    base.train.fine_tune_epochs = off.train.fine_tune_epochs = 0;
    const auto traces = run_all(ts, sp, {base, off});
    EXPECT_EQ(traces[0].predictions(), traces[1].predictions());
}

TEST(Run, OnlineQuietOnStationaryStream) {
    int quiet = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        SyntheticSpec spec;
        Regime sine{RegimeKind::sine, 1000};
        sine.period = 25.0;
        spec.regimes = {sine};
        spec.noise_sd = 0.05;
        spec.seed = 300 + s;
        const auto ts = make_synthetic(spec);
        auto c = quick(Strategy::online_tune);
        c.seed = s;
        quiet += run(ts, split(ts, {}, 10), c).drift_count() == 0;
    }
    EXPECT_GE(quiet, 18);
}

TEST(Run, OnlineReactsToLevelShift) {
    SyntheticSpec spec;
    Regime sine{RegimeKind::sine, 900};
    sine.period = 25.0;
    Regime shift{RegimeKind::level_shift, 100};
    shift.level = 4.0;
    spec.regimes = {sine, shift};
    spec.noise_sd = 0.05;
    spec.seed = 8;
    const auto ts = make_synthetic(spec);
    const auto t = run(ts, split(ts, {}, 10), quick(Strategy::online_tune));
    ASSERT_GE(t.drift_count(), 1);
    ASSERT_GE(t.adaptation_count(), 1);
    EXPECT_GT(t.pool_size, 0);
    Index first_drift = -1;
    for (const auto& e : t.events)
        if (e.kind == EventKind::drift) {
            first_drift = e.step;
            break;
        }
    EXPECT_GT(first_drift, 100);
    EXPECT_LE(first_drift, 100 + 60);
}

TEST(Run, SeedsAreDerivedAndLogged) {
    const auto ts = fixture(6);
    const auto t = run(ts, split(ts, {}, 10), quick(Strategy::offline_tune));
    ASSERT_TRUE(t.seeds.count("train"));
    EXPECT_EQ(t.seeds.at("train"), derive_seed(5, seed_stream::base_train));
}

TEST(Run, ErrorsCarryContext) {
    TimeSeries ts{"short", Eigen::VectorXd::LinSpaced(20, 0, 1), std::nullopt};
    EXPECT_THROW((void)run(ts, split(1000, {}, 10), quick(Strategy::base)), Error);
    TimeSeries bad = fixture(7);
    bad.values[10] = std::nan("");
    EXPECT_THROW((void)run(bad, split(bad, {}, 10), quick(Strategy::base)), DataError);
}

TEST(Compare, ShapeAndDeterminism) {
    const auto ts = fixture(9);
    const auto sp = split(ts, {}, 10);
    std::vector<StrategyConfig> configs;
    for (auto s : {Strategy::base, Strategy::offline_tune, Strategy::online_tune, Strategy::periodic_tune}) {
        auto c = quick(s);
        c.record_timings = false;
        configs.push_back(c);
    }
    const auto a = compare(ts, sp, configs);
    ASSERT_EQ(a.rows.size(), 4u);
    ASSERT_EQ(a.local_ranks.size(), 4u);
    double sum = 0.0;
    for (double r : a.local_ranks) sum += r;
    EXPECT_DOUBLE_EQ(sum, 10.0);
    EXPECT_EQ(compare(ts, sp, configs), a);
    EXPECT_THROW((void)compare(ts, sp, {configs[0]}), ConfigError);
}

TEST(Trace, FilesWritten) {
    const auto ts = fixture(10);
    auto c = quick(Strategy::periodic_tune);
    auto t = run(ts, split(ts, {}, 10), c);
    t.dataset = "fx";
    const auto dir = std::filesystem::temp_directory_path() / "pft_test_engine";
    std::filesystem::remove_all(dir);
    const auto path = write_trace(t, dir);
    std::ifstream in(path);
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, t.forecasts.size() + t.events.size());
    EXPECT_TRUE(std::filesystem::exists(dir / (path.stem().string() + ".summary.json")));
    EXPECT_TRUE(std::filesystem::exists(write_error_curve(t, dir)));
}

TEST(EngineConfig, FileAndOverrides) {
    EngineConfig cfg;
    apply_config_text(cfg, "# comment\np = 12\n\ndrift.gamma = 0.01\nengine.strategy = periodic_tune\n");
    EXPECT_EQ(cfg.get("p"), "12");
    EXPECT_EQ(cfg.detector.gamma, 0.01);
    EXPECT_EQ(cfg.strategy, Strategy::periodic_tune);
    apply_override(cfg, "seed=9");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_THROW(apply_config_text(cfg, "bogus.key = 1\n"), ConfigError);
    EXPECT_THROW(apply_config_text(cfg, "no equals sign\n"), ConfigError);
    EXPECT_THROW(apply_override(cfg, "drift.omega=abc"), ConfigError);

    EngineConfig round;
    apply_config_text(round, cfg.dump());
    EXPECT_EQ(round.dump(), cfg.dump());
}

TEST(EngineConfig, RegimeSyntaxRoundTrip) {
    const auto regimes = default_regimes();
    const auto again = parse_regimes(format_regimes(regimes));
    ASSERT_EQ(again.size(), regimes.size());
    for (std::size_t i = 0; i < regimes.size(); ++i) {
        EXPECT_EQ(again[i].kind, regimes[i].kind);
        EXPECT_EQ(again[i].length, regimes[i].length);
        EXPECT_EQ(again[i].level, regimes[i].level);
    }
    EXPECT_THROW((void)parse_regimes("sine(length=ten)"), ConfigError);
}
