#pragma once

#include "pft/clustering.hpp"
#include "pft/drift.hpp"
#include "pft/eval.hpp"
#include "pft/forecaster.hpp"
#include "pft/pool.hpp"
#include "pft/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pft {

enum class Strategy { base, offline_tune, online_tune, periodic_tune };

const char* to_string(Strategy s) noexcept;
Strategy strategy_from_string(const std::string& text);

/// How the reference distance is taken at the start of monitoring.
enum class DRefMode { window_mean, first_value };

const char* to_string(DRefMode m) noexcept;
DRefMode d_ref_mode_from_string(const std::string& text);

struct DetectorConfig {
    Index omega = 30;
    double gamma = 0.05;
    DRefMode d_ref_mode = DRefMode::window_mean;
    DeviationMode deviation = DeviationMode::signed_mean;
    /// When false, online_tune never adapts and behaves as offline_tune.
    bool enabled = true;

    void validate() const;
};

struct StrategyConfig {
    Strategy strategy = Strategy::online_tune;
    /// Model column in reports; defaults to the model kind.
    std::string model_label;
    ModelSpec model;
    TrainConfig train;
    ClusterConfig cluster;
    PoolConfig pool;
    DetectorConfig detector;
    double periodic_fraction = 0.10;
    std::uint64_t seed = 42;
    /// When false, every timing is reported as zero (byte-stable outputs).
    bool record_timings = true;

    void validate() const;
    [[nodiscard]] std::string label() const;
};

/// One one-step-ahead forecast in original units.
struct ForecastRecord {
    Index step = 0;
    Index index = 0;  // series index of the forecast target
    double prediction = 0.0;
    double actual = 0.0;
    int specialist = -1;  // -1 means the base model
    double distance = 0.0;
};

enum class EventKind { drift, adaptation };

struct RunEvent {
    Index step = 0;
    EventKind kind = EventKind::drift;
    // drift
    double mean_delta = 0.0;
    double epsilon = 0.0;
    double range = 0.0;
    // adaptation
    AdaptTrigger trigger = AdaptTrigger::drift;
    std::vector<int> new_specialists;
    Index fused = 0;
    Index unfit = 0;
    Index recluster_k = 0;
    bool skipped = false;
    double seconds = 0.0;
};

struct RunTimings {
    double offline_seconds = 0.0;
    double stream_seconds = 0.0;
    double adaptation_seconds = 0.0;
};

struct RunTrace {
    std::string dataset;
    std::string model_label;
    Strategy strategy = Strategy::base;
    std::vector<ForecastRecord> forecasts;
    std::vector<RunEvent> events;
    RunTimings timings;
    Index pool_size = 0;
    std::map<std::string, std::uint64_t> seeds;

    [[nodiscard]] Eigen::VectorXd predictions() const;
    [[nodiscard]] Eigen::VectorXd actuals() const;
    [[nodiscard]] Index adaptation_count() const;
    [[nodiscard]] Index drift_count() const;
};

/// Artifacts of the offline phase, shareable across strategies.
struct OfflineModels {
    TimeSeries scaled;
    WeightVector base;
    std::optional<SpecialistPool> pool;
    Clustering clustering;
    double base_seconds = 0.0;
    double pool_seconds = 0.0;
};

/// Scales the series, trains the base model on all train windows and, when
/// `with_pool`, builds the specialist pool from the validation split.
OfflineModels prepare_offline(const TimeSeries& series, const SeriesSplit& split, const StrategyConfig& config,
                              bool with_pool);

/// Streams the test split one step at a time with teacher forcing.
RunTrace run_stream(const OfflineModels& offline, const TimeSeries& series, const SeriesSplit& split,
                    const StrategyConfig& config);

/// prepare_offline followed by run_stream.
RunTrace run(const TimeSeries& series, const SeriesSplit& split, const StrategyConfig& config);

/// Runs every config; the offline phase is executed once per distinct
/// offline setup and shared. Traces come back in config order.
std::vector<RunTrace> run_all(const TimeSeries& series, const SeriesSplit& split,
                              const std::vector<StrategyConfig>& configs);

MetricRow metric_row(const RunTrace& trace);

/// run_all followed by ranking.
EvaluationReport compare(const TimeSeries& series, const SeriesSplit& split, const std::vector<StrategyConfig>& configs);

/// Writes `<stem>.jsonl` (one record per forecast, then one per event) and
/// `<stem>.summary.json`. Returns the JSON-lines path.
std::filesystem::path write_trace(const RunTrace& trace, const std::filesystem::path& dir);

/// Per-step absolute errors as CSV for plotting.
std::filesystem::path write_error_curve(const RunTrace& trace, const std::filesystem::path& dir);

} // namespace pft
