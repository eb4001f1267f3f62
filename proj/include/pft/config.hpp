#pragma once

#include "pft/engine.hpp"
#include "pft/series.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pft {

/// A named model setup for compare runs. Overrides apply on top of the
/// engine's model and train sections.
struct ModelVariant {
    std::string label;
    ModelSpec model;
    TrainConfig train;
    /// Label of the optimized variant this one is an under-optimized copy of.
    std::string under_of;
};

/// Every tunable of a run. Loaded from flat `key = value` text.
struct EngineConfig {
    SplitFractions split;
    ModelSpec model;
    TrainConfig train;
    ClusterConfig cluster;
    PoolConfig pool;
    DetectorConfig detector;
    double periodic_fraction = 0.10;
    Strategy strategy = Strategy::online_tune;
    std::uint64_t seed = 42;
    bool record_timings = true;

    std::string data_column = "0";
    SyntheticSpec synth;

    std::string compare_models;
    std::string compare_strategies = "base,offline_tune,online_tune,periodic_tune";
    int workers = 1;

    EngineConfig();

    void set(const std::string& key, const std::string& value);
    [[nodiscard]] std::string get(const std::string& key) const;
    /// All keys in a fixed order.
    [[nodiscard]] static const std::vector<std::string>& keys();

    void validate() const;

    [[nodiscard]] StrategyConfig strategy_config(Strategy s) const;
    [[nodiscard]] StrategyConfig strategy_config(Strategy s, const ModelVariant& variant) const;
    [[nodiscard]] std::vector<Strategy> strategies() const;
    [[nodiscard]] std::vector<ModelVariant> model_variants() const;
    [[nodiscard]] ColumnSelector column() const;
    [[nodiscard]] SyntheticSpec synthetic_spec() const;

    /// `key = value` lines for every key, defaults materialized.
    [[nodiscard]] std::string dump() const;
};

/// Applies a config file on top of `config`. Blank lines and `#` comments
/// are ignored; unknown keys and malformed lines raise ConfigError naming the line.
void apply_config_text(EngineConfig& config, const std::string& text, const std::string& origin = "config");
void apply_config_file(EngineConfig& config, const std::filesystem::path& path);
/// Applies one `key=value` override.
void apply_override(EngineConfig& config, const std::string& assignment);

/// Parses `sine(length=200,level=5);ar1(length=200,phi=0.8)`.
std::vector<Regime> parse_regimes(const std::string& text);
std::string format_regimes(const std::vector<Regime>& regimes);

/// Three regimes (sine, downward trend, AR(1)) cycled to 2000 points.
std::vector<Regime> default_regimes();

} // namespace pft
