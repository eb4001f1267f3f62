#include "pft/engine.hpp"

#include "pft/error.hpp"
#include "pft/random.hpp"
#include "pft/serialization.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace pft {

const char* to_string(Strategy s) noexcept {
    switch (s) {
    case Strategy::base: return "base";
    case Strategy::offline_tune: return "offline_tune";
    case Strategy::online_tune: return "online_tune";
    case Strategy::periodic_tune: return "periodic_tune";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& text) {
    if (text == "base") return Strategy::base;
    if (text == "offline_tune" || text == "offline") return Strategy::offline_tune;
    if (text == "online_tune" || text == "online") return Strategy::online_tune;
    if (text == "periodic_tune" || text == "periodic") return Strategy::periodic_tune;
    throw ConfigError("unknown strategy '" + text + "'");
}

const char* to_string(DRefMode m) noexcept { return m == DRefMode::window_mean ? "mean" : "first"; }

DRefMode d_ref_mode_from_string(const std::string& text) {
    if (text == "mean") return DRefMode::window_mean;
    if (text == "first") return DRefMode::first_value;
    throw ConfigError("unknown d_ref mode '" + text + "'");
}

void DetectorConfig::validate() const {
    if (omega < 1) throw ConfigError("drift.omega must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("drift.gamma must lie in (0, 1)");
}

void StrategyConfig::validate() const {
    model.validate();
    train.validate();
    cluster.validate();
    pool.validate();
    detector.validate();
    if (!(periodic_fraction > 0.0 && periodic_fraction <= 1.0))
        throw ConfigError("engine.periodic_fraction must lie in (0, 1]");
}

std::string StrategyConfig::label() const { return model_label.empty() ? std::string(to_string(model.kind)) : model_label; }

Eigen::VectorXd RunTrace::predictions() const {
    Eigen::VectorXd v(static_cast<Index>(forecasts.size()));
    for (std::size_t i = 0; i < forecasts.size(); ++i) v[static_cast<Index>(i)] = forecasts[i].prediction;
    return v;
}

Eigen::VectorXd RunTrace::actuals() const {
    Eigen::VectorXd v(static_cast<Index>(forecasts.size()));
    for (std::size_t i = 0; i < forecasts.size(); ++i) v[static_cast<Index>(i)] = forecasts[i].actual;
    return v;
}

Index RunTrace::adaptation_count() const {
    Index n = 0;
    for (const auto& e : events) n += e.kind == EventKind::adaptation ? 1 : 0;
    return n;
}

Index RunTrace::drift_count() const {
    Index n = 0;
    for (const auto& e : events) n += e.kind == EventKind::drift ? 1 : 0;
    return n;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

TrainConfig effective_train(const StrategyConfig& config) {
    TrainConfig t = config.train;
    t.seed = derive_seed(config.seed, seed_stream::base_train);
    return t;
}

ClusterConfig effective_cluster(const StrategyConfig& config) {
    ClusterConfig c = config.cluster;
    c.xmeans.seed = derive_seed(config.seed, seed_stream::clustering);
    return c;
}

// Identifies configs whose offline phase is interchangeable.
std::string offline_key(const StrategyConfig& c) {
    std::ostringstream k;
    k.precision(17);
    k << nlohmann::json(c.model).dump() << '|' << c.train.epochs << ',' << c.train.learning_rate << ','
      << c.train.batch_size << ',' << c.train.l2 << ',' << c.train.fine_tune_lr_factor << ','
      << c.train.fine_tune_epochs << '|' << c.cluster.xmeans.k_min << ',' << c.cluster.xmeans.k_max << ','
      << c.cluster.xmeans.max_iter << ',' << c.cluster.xmeans.restarts << ',' << c.cluster.n_min_fraction << ','
      << to_string(c.cluster.inter_mode) << '|' << c.pool.tau_fraction << ',' << c.pool.recent_len << ','
      << c.pool.max_size << '|' << c.seed;
    return k.str();
}

template <typename E>
[[noreturn]] void rethrow_at(const E& e, Index step) {
    throw E("step " + std::to_string(step) + ": " + e.what());
}

} // namespace

OfflineModels prepare_offline(const TimeSeries& series, const SeriesSplit& split, const StrategyConfig& config,
                              bool with_pool) {
    config.validate();
    const Index p = config.model.input_len;
    if (series.size() < min_series_length(p))
        throw DataError("series '" + series.name + "' has " + std::to_string(series.size()) + " points; at least " +
                        std::to_string(min_series_length(p)) + " are required");
    if (!series.values.allFinite()) throw DataError("series '" + series.name + "' contains non-finite values");

    OfflineModels out;
    out.scaled = fit_scaler(series, split);

    const TrainConfig train = effective_train(config);
    auto t0 = Clock::now();
    out.base = pft::train(config.model, train, sliding_samples(out.scaled.values, split.train, p));
    out.base_seconds = seconds_since(t0);

    if (with_pool) {
        t0 = Clock::now();
        out.pool = build_offline(out.base, out.scaled.values, split.val, train, effective_cluster(config), config.pool,
                                 &out.clustering);
        out.pool_seconds = seconds_since(t0);
    }
    return out;
}

RunTrace run_stream(const OfflineModels& offline, const TimeSeries& series, const SeriesSplit& split,
                    const StrategyConfig& config) {
    config.validate();
    const Index p = config.model.input_len;
    const bool pooled = config.strategy != Strategy::base;
    if (pooled && !offline.pool) throw std::logic_error("strategy needs a specialist pool but none was built");
    const ScaleStats stats = *offline.scaled.scale_stats;
    const Eigen::VectorXd& values = offline.scaled.values;
    const TrainConfig train = effective_train(config);
    const ClusterConfig cluster = effective_cluster(config);

    RunTrace trace;
    trace.dataset = series.name;
    trace.model_label = config.label();
    trace.strategy = config.strategy;
    trace.seeds = {{"seed", config.seed}, {"train", train.seed}, {"cluster", cluster.xmeans.seed}};
    trace.timings.offline_seconds = offline.base_seconds + (pooled ? offline.pool_seconds : 0.0);

    std::optional<SpecialistPool> pool = pooled ? offline.pool : std::nullopt;
    if (pool) {
        // The buffer starts with the history preceding the test split.
        const Index cap = pool->recent.capacity();
        for (Index i = std::max<Index>(0, split.test.begin - cap); i < split.test.begin; ++i) pool->recent.push(values[i]);
    }

    const bool monitoring = config.strategy == Strategy::online_tune && config.detector.enabled;
    std::optional<DriftDetector> detector;
    std::vector<double> calibration;
    const Index calibration_len = config.detector.d_ref_mode == DRefMode::first_value ? 1 : config.detector.omega;

    const Index n_test = split.test.size();
    const auto interval = static_cast<Index>(std::ceil(config.periodic_fraction * static_cast<double>(n_test)));
    Index last_adaptation_step = 0;

    const auto do_adapt = [&](const Eigen::VectorXd& recent, AdaptTrigger trigger, Index step) {
        const auto t0 = Clock::now();
        const AdaptationReport report = adapt(*pool, recent, trigger, step, train, cluster);
        RunEvent e;
        e.step = step;
        e.kind = EventKind::adaptation;
        e.trigger = trigger;
        e.new_specialists = report.new_specialists;
        e.fused = report.fused;
        e.unfit = report.unfit;
        e.recluster_k = report.recluster_k;
        e.skipped = report.skipped;
        e.seconds = seconds_since(t0);
        trace.timings.adaptation_seconds += e.seconds;
        trace.events.push_back(std::move(e));
        return report;
    };

    trace.forecasts.reserve(static_cast<std::size_t>(n_test));
    const auto stream_start = Clock::now();
    for (Index s = 0; s < n_test; ++s) {
        const Index step = s + 1;
        try {
            const Index t = split.test.begin + s - 1;  // newest observed index
            const auto window = values.segment(t - p + 1, p);

            ForecastRecord rec;
            rec.step = step;
            rec.index = t + 1;
            double scaled_prediction = 0.0;
            if (pooled) {
                const Selection sel = select(*pool, window);
                scaled_prediction = predict(pool->specialists[sel.index].weights, window);
                rec.specialist = sel.id;
                rec.distance = sel.distance;
            } else {
                scaled_prediction = predict(offline.base, window);
                rec.distance = std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(scaled_prediction)) throw NumericError("non-finite forecast");
            rec.prediction = stats.inverse(scaled_prediction);
            rec.actual = series.values[t + 1];
            trace.forecasts.push_back(rec);

            if (pool) pool->recent.push(values[t + 1]);

            if (monitoring) {
                if (!detector || calibration.size() < static_cast<std::size_t>(calibration_len)) {
                    calibration.push_back(rec.distance);
                    if (calibration.size() == static_cast<std::size_t>(calibration_len)) {
                        const double d_ref = std::accumulate(calibration.begin(), calibration.end(), 0.0) /
                                             static_cast<double>(calibration.size());
                        if (detector)
                            detector->reset(d_ref);
                        else
                            detector.emplace(d_ref, config.detector.omega, config.detector.gamma,
                                             config.detector.deviation);
                    }
                } else {
                    const DriftVerdict v = detector->observe(rec.distance);
                    if (v.drifted) {
                        RunEvent e;
                        e.step = step;
                        e.kind = EventKind::drift;
                        e.mean_delta = v.mean_delta;
                        e.epsilon = v.epsilon;
                        e.range = v.range;
                        trace.events.push_back(e);
                        const auto report = do_adapt(pool->recent.tail(), AdaptTrigger::drift, step);
                        if (report.new_specialists.empty()) {
                            // Centroids unchanged: keep the reference and keep watching.
                            detector->reset(detector->d_ref());
                        } else {
                            calibration.clear();
                        }
                    }
                }
            }

            if (config.strategy == Strategy::periodic_tune && step % interval == 0) {
                const Index since = step - last_adaptation_step;
                do_adapt(pool->recent.tail(since), AdaptTrigger::periodic, step);
                last_adaptation_step = step;
            }
        } catch (const ConfigError& e) {
            rethrow_at(e, step);
        } catch (const DataError& e) {
            rethrow_at(e, step);
        } catch (const NumericError& e) {
            rethrow_at(e, step);
        } catch (const Error& e) {
            rethrow_at(e, step);
        }
    }
    trace.timings.stream_seconds = seconds_since(stream_start);
    trace.pool_size = pool ? pool->size() : 0;

    if (!config.record_timings) {
        trace.timings = {};
        for (auto& e : trace.events) e.seconds = 0.0;
    }
    return trace;
}

RunTrace run(const TimeSeries& series, const SeriesSplit& split, const StrategyConfig& config) {
    const OfflineModels offline = prepare_offline(series, split, config, config.strategy != Strategy::base);
    return run_stream(offline, series, split, config);
}

std::vector<RunTrace> run_all(const TimeSeries& series, const SeriesSplit& split,
                              const std::vector<StrategyConfig>& configs) {
    std::map<std::string, OfflineModels> shared;
    std::vector<RunTrace> traces;
    traces.reserve(configs.size());
    for (const auto& c : configs) {
        const auto key = offline_key(c);
        auto it = shared.find(key);
        if (it == shared.end()) {
            bool needs_pool = false;
            for (const auto& other : configs)
                needs_pool = needs_pool || (offline_key(other) == key && other.strategy != Strategy::base);
            it = shared.emplace(key, prepare_offline(series, split, c, needs_pool)).first;
        }
        traces.push_back(run_stream(it->second, series, split, c));
    }
    return traces;
}

MetricRow metric_row(const RunTrace& trace) {
    if (trace.forecasts.empty()) throw DataError("run produced no forecasts");
    const Eigen::VectorXd pred = trace.predictions();
    const Eigen::VectorXd act = trace.actuals();
    MetricRow row;
    row.dataset = trace.dataset;
    row.model = trace.model_label;
    row.strategy = to_string(trace.strategy);
    row.rmse = rmse(pred, act);
    row.nrmse = (act.maxCoeff() > act.minCoeff()) ? nrmse(pred, act) : 0.0;
    row.runtime_total_s = trace.timings.offline_seconds + trace.timings.stream_seconds;
    row.runtime_adapt_s = trace.timings.adaptation_seconds;
    row.n_forecasts = static_cast<Index>(trace.forecasts.size());
    return row;
}

EvaluationReport compare(const TimeSeries& series, const SeriesSplit& split, const std::vector<StrategyConfig>& configs) {
    if (configs.size() < 2) throw ConfigError("compare needs at least two strategy configs");
    std::vector<MetricRow> rows;
    for (const auto& t : run_all(series, split, configs)) rows.push_back(metric_row(t));
    return rank(std::move(rows));
}

namespace {

nlohmann::json event_json(const RunEvent& e) {
    nlohmann::json j{{"type", e.kind == EventKind::drift ? "drift" : "adaptation"}, {"step", e.step}};
    if (e.kind == EventKind::drift) {
        j["mean_delta"] = e.mean_delta;
        j["epsilon"] = e.epsilon;
        j["R"] = e.range;
    } else {
        j["trigger"] = to_string(e.trigger);
        j["new_specialists"] = e.new_specialists;
        j["fused"] = e.fused;
        j["unfit"] = e.unfit;
        j["recluster_k"] = e.recluster_k;
        j["skipped"] = e.skipped;
        j["seconds"] = e.seconds;
    }
    return j;
}

std::string trace_stem(const RunTrace& trace) {
    return "trace_" + trace.dataset + "_" + trace.model_label + "_" + to_string(trace.strategy);
}

} // namespace

std::filesystem::path write_trace(const RunTrace& trace, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto stem = trace_stem(trace);
    const auto lines_path = dir / (stem + ".jsonl");
    std::ofstream out(lines_path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + lines_path.string() + "'");
    for (const auto& f : trace.forecasts) {
        nlohmann::json j{{"type", "forecast"},  {"step", f.step},     {"index", f.index},
                         {"prediction", f.prediction}, {"actual", f.actual}};
        j["specialist"] = f.specialist < 0 ? nlohmann::json("base") : nlohmann::json(f.specialist);
        if (std::isfinite(f.distance)) j["distance"] = f.distance;
        out << j.dump() << '\n';
    }
    for (const auto& e : trace.events) out << event_json(e).dump() << '\n';

    const MetricRow row = metric_row(trace);
    nlohmann::json summary{{"dataset", trace.dataset},
                           {"model", trace.model_label},
                           {"strategy", to_string(trace.strategy)},
                           {"rmse", row.rmse},
                           {"nrmse", row.nrmse},
                           {"nrmse_normalizer", "range of test targets (max - min)"},
                           {"n_forecasts", row.n_forecasts},
                           {"drift_events", trace.drift_count()},
                           {"adaptations", trace.adaptation_count()},
                           {"pool_size", trace.pool_size},
                           {"seeds", trace.seeds},
                           {"timings",
                            {{"offline_seconds", trace.timings.offline_seconds},
                             {"stream_seconds", trace.timings.stream_seconds},
                             {"adaptation_seconds", trace.timings.adaptation_seconds}}}};
    write_json(summary, dir / (stem + ".summary.json"));
    return lines_path;
}

std::filesystem::path write_error_curve(const RunTrace& trace, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto path = dir / ("errors_" + trace.dataset + "_" + trace.model_label + "_" + to_string(trace.strategy) + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "step,prediction,actual,abs_error,specialist\n";
    for (const auto& f : trace.forecasts)
        out << f.step << ',' << f.prediction << ',' << f.actual << ',' << std::abs(f.prediction - f.actual) << ','
            << f.specialist << '\n';
    return path;
}

} // namespace pft
