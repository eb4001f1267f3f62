#include "pft/cli.hpp"

#include "pft/error.hpp"
#include "pft/random.hpp"
#include "pft/serialization.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace pft {

namespace {

namespace fs = std::filesystem;

struct Dataset {
    TimeSeries series;
    SeriesSplit split;
};

std::vector<Dataset> load_datasets(const CommandInputs& in) {
    const EngineConfig& c = in.config;
    const Index p = c.model.input_len;
    std::vector<TimeSeries> series;
    if (in.data.empty()) {
        series.push_back(make_synthetic(c.synthetic_spec()));
    } else {
        for (const auto& path : in.data) {
            auto s = load_csv(path, c.column(), p);
            s.name = path.stem().string();
            series.push_back(std::move(s));
        }
    }
    std::vector<Dataset> out;
    for (auto& s : series) {
        if (s.size() < min_series_length(p))
            throw DataError("series '" + s.name + "' has " + std::to_string(s.size()) + " points; at least " +
                            std::to_string(min_series_length(p)) + " are required");
        const auto sp = split(s, c.split, p);
        out.push_back({std::move(s), sp});
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            if (out[i].series.name == out[j].series.name)
                throw ConfigError("two datasets share the name '" + out[i].series.name + "'");
    return out;
}

fs::path echo_config(const CommandInputs& in) {
    std::error_code ec;
    fs::create_directories(in.out_dir, ec);
    const auto path = in.out_dir / "config.resolved.cfg";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << in.config.dump();
    return path;
}

std::string fixed(double x, int digits = 6) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

} // namespace

int exit_code_for_current_exception(std::string& message) {
    try {
        throw;
    } catch (const ConfigError& e) {
        message = e.what();
        return exit_code::config;
    } catch (const DataError& e) {
        message = e.what();
        return exit_code::data;
    } catch (const std::exception& e) {
        message = e.what();
        return exit_code::runtime;
    } catch (...) {
        message = "unknown error";
        return exit_code::runtime;
    }
}

CommandResult cmd_run(const CommandInputs& in) {
    in.config.validate();
    if (in.data.size() > 1) throw ConfigError("run takes a single dataset; use compare for several");
    const auto datasets = load_datasets(in);
    const auto& ds = datasets.front();
    const StrategyConfig sc = in.config.strategy_config(in.config.strategy);

    CommandResult result;
    result.artifacts.push_back(echo_config(in));

    RunTrace trace;
    if (!in.pool_load.empty()) {
        OfflineModels offline;
        offline.pool = load_pool(in.pool_load);
        if (offline.pool->spec.input_len != sc.model.input_len || offline.pool->spec.kind != sc.model.kind)
            throw ConfigError("pool in '" + in.pool_load.string() + "' was built for a different model");
        offline.scaled = fit_scaler(ds.series, ds.split);
        offline.base = offline.pool->base_weights;
        StrategyConfig loaded = sc;
        loaded.model = offline.pool->spec;
        trace = run_stream(offline, ds.series, ds.split, loaded);
    } else {
        trace = run(ds.series, ds.split, sc);
    }

    if (!in.pool_save.empty()) {
        if (sc.strategy == Strategy::base) throw ConfigError("--pool-save needs a strategy that builds a pool");
        // Persist the pool as built offline so a later --pool-load replays the same stream.
        const auto offline = prepare_offline(ds.series, ds.split, sc, true);
        save_pool(*offline.pool, in.pool_save);
        result.artifacts.push_back(in.pool_save);
    }

    result.artifacts.push_back(write_trace(trace, in.out_dir));
    result.artifacts.push_back(write_error_curve(trace, in.out_dir));
    const auto report = rank({metric_row(trace)});
    const auto files = emit_report(report, in.out_dir);
    result.artifacts.insert(result.artifacts.end(), {files.metrics_csv, files.summary_csv, files.json});

    const auto& row = report.rows.front();
    result.summary = row.dataset + " " + row.model + " " + row.strategy + ": rmse " + fixed(row.rmse) + ", nrmse " +
                     fixed(row.nrmse) + " (range-normalized), " + std::to_string(trace.drift_count()) +
                     " drift events, " + std::to_string(trace.adaptation_count()) + " adaptations, pool size " +
                     std::to_string(trace.pool_size) + "\n";
    return result;
}

CommandResult cmd_compare(const CommandInputs& in) {
    in.config.validate();
    const auto strategies = in.config.strategies();
    const auto variants = in.config.model_variants();
    if (strategies.size() * variants.size() < 2) throw ConfigError("compare needs at least two strategy/model configs");
    const auto datasets = load_datasets(in);

    CommandResult result;
    result.artifacts.push_back(echo_config(in));

    struct Task {
        std::size_t dataset;
        std::size_t variant;
    };
    std::vector<Task> tasks;
    for (std::size_t d = 0; d < datasets.size(); ++d)
        for (std::size_t v = 0; v < variants.size(); ++v) tasks.push_back({d, v});

    std::vector<std::vector<RunTrace>> traces(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                const auto& ds = datasets[tasks[i].dataset];
                std::vector<StrategyConfig> configs;
                for (auto s : strategies) configs.push_back(in.config.strategy_config(s, variants[tasks[i].variant]));
                traces[i] = run_all(ds.series, ds.split, configs);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(in.config.workers), tasks.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<MetricRow> rows;
    const auto trace_dir = in.out_dir / "traces";
    for (const auto& group : traces)
        for (const auto& t : group) {
            rows.push_back(metric_row(t));
            result.artifacts.push_back(write_trace(t, trace_dir));
            result.artifacts.push_back(write_error_curve(t, trace_dir));
        }
    const auto report = rank(std::move(rows));
    const auto files = emit_report(report, in.out_dir);
    result.artifacts.insert(result.artifacts.end(), {files.metrics_csv, files.summary_csv, files.json});

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& v : variants)
        if (!v.under_of.empty()) pairs.emplace_back(v.under_of, v.label);
    if (!pairs.empty()) {
        const auto path = in.out_dir / "paired.csv";
        write_paired_csv(paired_comparison(report, pairs), path);
        result.artifacts.push_back(path);
    }

    std::ostringstream s;
    s << "model,strategy,avg_nrmse,std_nrmse,avg_local_rank,avg_global_rank,avg_runtime_adapt_s\n";
    for (const auto& r : report.summary)
        s << r.model << ',' << r.strategy << ',' << fixed(r.avg_nrmse) << ',' << fixed(r.std_nrmse) << ','
          << fixed(r.avg_local_rank, 3) << ',' << fixed(r.avg_global_rank, 3) << ',' << fixed(r.avg_runtime_adapt_s, 4)
          << '\n';
    s << "nrmse is normalized by the range of the test targets\n";
    result.summary = s.str();
    return result;
}

CommandResult cmd_inspect_clusters(const CommandInputs& in) {
    in.config.validate();
    const auto datasets = load_datasets(in);
    CommandResult result;
    result.artifacts.push_back(echo_config(in));

    ClusterConfig cluster = in.config.cluster;
    cluster.xmeans.seed = derive_seed(in.config.seed, seed_stream::clustering);
    std::ostringstream s;
    for (const auto& ds : datasets) {
        const auto scaled = fit_scaler(ds.series, ds.split);
        const auto subs = segment_nonoverlapping(scaled.values, ds.split.val, in.config.model.input_len);
        const auto clustering = cluster_subsequences(subs, cluster);
        const auto dir = datasets.size() == 1 ? in.out_dir : in.out_dir / ds.series.name;
        const auto files = write_cluster_traces(subs, clustering, dir);
        result.artifacts.insert(result.artifacts.end(), files.begin(), files.end());
        nlohmann::json j = clustering;
        j["dataset"] = ds.series.name;
        j["scaled"] = true;
        j["cluster_seed"] = cluster.xmeans.seed;
        const auto json_path = dir / "clustering.json";
        write_json(j, json_path);
        result.artifacts.push_back(json_path);
        s << ds.series.name << ": K = " << clustering.k() << " over " << subs.size() << " subsequences (n_min "
          << clustering.n_min << ")\n";
    }
    result.summary = s.str();
    return result;
}

CommandResult cmd_synth(const CommandInputs& in) {
    in.config.validate();
    const auto series = make_synthetic(in.config.synthetic_spec());
    std::error_code ec;
    fs::create_directories(in.out_dir, ec);
    CommandResult result;
    result.artifacts.push_back(echo_config(in));
    const auto path = in.out_dir / (series.name + ".csv");
    write_csv(path, series);
    result.artifacts.push_back(path);
    result.summary = "wrote " + std::to_string(series.size()) + " points to " + path.string() + "\n";
    return result;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pattern-specialized forecasting with drift-triggered adaptation", "pft"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> data;
    std::string column;
    std::string strategy;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<int> workers;
    std::vector<std::string> overrides;
    std::string pool_save;
    std::string pool_load;
    std::string models;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--data", data, "CSV dataset (repeatable); omit to use the synthetic spec");
        sub->add_option("--column", column, "column name or zero-based index");
        sub->add_option("--seed", seed, "global seed");
        sub->add_option("--out", out_dir, "output directory (default: $PFT_OUT_DIR or pft_out)");
        sub->add_option("--set", overrides, "config override key=value (repeatable)");
    };
    auto* run_cmd = app.add_subcommand("run", "run one strategy on one dataset");
    common(run_cmd);
    run_cmd->add_option("--strategy", strategy, "base | offline_tune | online_tune | periodic_tune");
    run_cmd->add_option("--pool-save", pool_save, "write the offline specialist pool to this file");
    run_cmd->add_option("--pool-load", pool_load, "use a saved pool instead of the offline phase");

    auto* compare_cmd = app.add_subcommand("compare", "compare strategies across datasets and models");
    common(compare_cmd);
    compare_cmd->add_option("--strategy", strategy, "comma-separated strategies (default: all four)");
    compare_cmd->add_option("--models", models, "model variants, e.g. mlp;mlp_under=mlp:hidden=2:under=mlp");
    compare_cmd->add_option("--workers", workers, "concurrent runs");

    auto* inspect_cmd = app.add_subcommand("inspect-clusters", "cluster validation subsequences and export traces");
    common(inspect_cmd);

    auto* synth_cmd = app.add_subcommand("synth", "write the synthetic dataset as CSV");
    common(synth_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::config;
    }

    CommandInputs in;
    try {
        if (!config_path.empty()) apply_config_file(in.config, config_path);
        if (!column.empty()) in.config.set("data.column", column);
        if (seed) in.config.seed = *seed;
        if (workers) in.config.set("workers", std::to_string(*workers));
        if (!models.empty()) in.config.set("compare.models", models);
        if (!strategy.empty()) {
            if (run_cmd->parsed()) in.config.set("engine.strategy", strategy);
            else in.config.set("compare.strategies", strategy);
        }
        for (const auto& o : overrides) apply_override(in.config, o);

        for (const auto& d : data) in.data.emplace_back(d);
        if (!out_dir.empty()) in.out_dir = out_dir;
        else if (const char* env = std::getenv("PFT_OUT_DIR"); env && *env) in.out_dir = env;
        else in.out_dir = "pft_out";
        in.pool_save = pool_save;
        in.pool_load = pool_load;

        CommandResult result;
        if (run_cmd->parsed()) result = cmd_run(in);
        else if (compare_cmd->parsed()) result = cmd_compare(in);
        else if (inspect_cmd->parsed()) result = cmd_inspect_clusters(in);
        else result = cmd_synth(in);
        out << result.summary;
        out << "output: " << in.out_dir.string() << '\n';
        return result.exit_code;
    } catch (...) {
        std::string message;
        const int code = exit_code_for_current_exception(message);
        err << "pft: error: " << message << '\n';
        return code;
    }
}

} // namespace pft
