#include "pft/config.hpp"

#include "pft/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace pft {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::string fmt(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto s = trim(text);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ConfigError("invalid value '" + text + "' for " + key);
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const auto s = trim(text);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("invalid boolean '" + text + "' for " + key);
}

template <typename T>
std::string fmt_value(T v) {
    return std::to_string(v);
}

struct Field {
    std::function<void(EngineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const EngineConfig&)> get;
};

#define PFT_NUM(member, T)                                                                                 \
    Field {                                                                                                \
        [](EngineConfig& c, const std::string& k, const std::string& v) { c.member = parse_number<T>(k, v); }, \
            [](const EngineConfig& c) { return fmt_value(c.member); }                                      \
    }
#define PFT_REAL(member)                                                                                   \
    Field {                                                                                                \
        [](EngineConfig& c, const std::string& k, const std::string& v) { c.member = parse_number<double>(k, v); }, \
            [](const EngineConfig& c) { return fmt(c.member); }                                            \
    }

const std::vector<std::pair<std::string, Field>>& field_table() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"p", {[](EngineConfig& c, const std::string& k, const std::string& v) {
                   c.model.input_len = parse_number<Index>(k, v);
                   c.synth.window_len = c.model.input_len;
               },
               [](const EngineConfig& c) { return std::to_string(c.model.input_len); }}},
        {"split.train", PFT_REAL(split.train)},
        {"split.val", PFT_REAL(split.val)},
        {"split.test", PFT_REAL(split.test)},
        {"model.kind", {[](EngineConfig& c, const std::string&, const std::string& v) {
                            c.model.kind = model_kind_from_string(trim(v));
                        },
                        [](const EngineConfig& c) { return std::string(to_string(c.model.kind)); }}},
        {"model.hidden", PFT_NUM(model.hidden, Index)},
        {"model.activation", {[](EngineConfig& c, const std::string&, const std::string& v) {
                                  c.model.activation = activation_from_string(trim(v));
                              },
                              [](const EngineConfig& c) { return std::string(to_string(c.model.activation)); }}},
        {"train.epochs", PFT_NUM(train.epochs, int)},
        {"train.lr", PFT_REAL(train.learning_rate)},
        {"train.batch", PFT_NUM(train.batch_size, int)},
        {"train.l2", PFT_REAL(train.l2)},
        {"train.ft_lr_factor", PFT_REAL(train.fine_tune_lr_factor)},
        {"train.ft_epochs", PFT_NUM(train.fine_tune_epochs, int)},
        {"cluster.k_min", PFT_NUM(cluster.xmeans.k_min, Index)},
        {"cluster.k_max", PFT_NUM(cluster.xmeans.k_max, Index)},
        {"cluster.max_iter", PFT_NUM(cluster.xmeans.max_iter, int)},
        {"cluster.restarts", PFT_NUM(cluster.xmeans.restarts, int)},
        {"cluster.n_min_fraction", PFT_REAL(cluster.n_min_fraction)},
        {"cluster.inter_cluster", {[](EngineConfig& c, const std::string&, const std::string& v) {
                                       c.cluster.inter_mode = inter_cluster_mode_from_string(trim(v));
                                   },
                                   [](const EngineConfig& c) { return std::string(to_string(c.cluster.inter_mode)); }}},
        {"drift.omega", PFT_NUM(detector.omega, Index)},
        {"drift.gamma", PFT_REAL(detector.gamma)},
        {"drift.d_ref_mode", {[](EngineConfig& c, const std::string&, const std::string& v) {
                                  c.detector.d_ref_mode = d_ref_mode_from_string(trim(v));
                              },
                              [](const EngineConfig& c) { return std::string(to_string(c.detector.d_ref_mode)); }}},
        {"drift.deviation", {[](EngineConfig& c, const std::string&, const std::string& v) {
                                 c.detector.deviation = deviation_mode_from_string(trim(v));
                             },
                             [](const EngineConfig& c) { return std::string(to_string(c.detector.deviation)); }}},
        {"drift.enabled", {[](EngineConfig& c, const std::string& k, const std::string& v) {
                               c.detector.enabled = parse_bool(k, v);
                           },
                           [](const EngineConfig& c) { return std::string(c.detector.enabled ? "true" : "false"); }}},
        {"pool.tau_fraction", PFT_REAL(pool.tau_fraction)},
        {"pool.recent_len", PFT_NUM(pool.recent_len, Index)},
        {"pool.max_size", PFT_NUM(pool.max_size, Index)},
        {"engine.strategy", {[](EngineConfig& c, const std::string&, const std::string& v) {
                                 c.strategy = strategy_from_string(trim(v));
                             },
                             [](const EngineConfig& c) { return std::string(to_string(c.strategy)); }}},
        {"engine.periodic_fraction", PFT_REAL(periodic_fraction)},
        {"seed", PFT_NUM(seed, std::uint64_t)},
        {"record_timings", {[](EngineConfig& c, const std::string& k, const std::string& v) {
                                c.record_timings = parse_bool(k, v);
                            },
                            [](const EngineConfig& c) { return std::string(c.record_timings ? "true" : "false"); }}},
        {"data.column", {[](EngineConfig& c, const std::string&, const std::string& v) { c.data_column = trim(v); },
                         [](const EngineConfig& c) { return c.data_column; }}},
        {"synth.name", {[](EngineConfig& c, const std::string&, const std::string& v) { c.synth.name = trim(v); },
                        [](const EngineConfig& c) { return c.synth.name; }}},
        {"synth.regimes", {[](EngineConfig& c, const std::string&, const std::string& v) {
                               c.synth.regimes = parse_regimes(v);
                           },
                           [](const EngineConfig& c) { return format_regimes(c.synth.regimes); }}},
        {"synth.noise_sd", PFT_REAL(synth.noise_sd)},
        {"synth.seed", PFT_NUM(synth.seed, std::uint64_t)},
        {"compare.models", {[](EngineConfig& c, const std::string&, const std::string& v) { c.compare_models = trim(v); },
                            [](const EngineConfig& c) { return c.compare_models; }}},
        {"compare.strategies", {[](EngineConfig& c, const std::string&, const std::string& v) {
                                    c.compare_strategies = trim(v);
                                },
                                [](const EngineConfig& c) { return c.compare_strategies; }}},
        {"workers", PFT_NUM(workers, int)},
    };
    return table;
}

#undef PFT_NUM
#undef PFT_REAL

const Field& field(const std::string& key) {
    for (const auto& [name, f] : field_table())
        if (name == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

ModelVariant parse_variant(const std::string& item, const EngineConfig& base) {
    ModelVariant v;
    v.model = base.model;
    v.train = base.train;
    std::string body = item;
    if (const auto eq = item.find('='); eq != std::string::npos && item.find(':') > eq) {
        v.label = trim(item.substr(0, eq));
        body = item.substr(eq + 1);
    }
    const auto parts = split_on(body, ':');
    if (parts.empty() || parts[0].empty()) throw ConfigError("empty model variant in compare.models");
    v.model.kind = model_kind_from_string(parts[0]);
    if (v.label.empty()) v.label = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw ConfigError("model option '" + parts[i] + "' is not key=value");
        const auto k = trim(parts[i].substr(0, eq));
        const auto val = trim(parts[i].substr(eq + 1));
        const auto key = "compare.models " + v.label + "." + k;
        if (k == "hidden") v.model.hidden = parse_number<Index>(key, val);
        else if (k == "activation") v.model.activation = activation_from_string(val);
        else if (k == "epochs") v.train.epochs = parse_number<int>(key, val);
        else if (k == "lr") v.train.learning_rate = parse_number<double>(key, val);
        else if (k == "batch") v.train.batch_size = parse_number<int>(key, val);
        else if (k == "l2") v.train.l2 = parse_number<double>(key, val);
        else if (k == "ft_epochs") v.train.fine_tune_epochs = parse_number<int>(key, val);
        else if (k == "ft_lr_factor") v.train.fine_tune_lr_factor = parse_number<double>(key, val);
        else if (k == "under") v.under_of = val;
        else throw ConfigError("unknown model option '" + k + "' in compare.models");
    }
    return v;
}

} // namespace

std::vector<Regime> default_regimes() {
    Regime sine;
    sine.kind = RegimeKind::sine;
    sine.length = 200;
    sine.amplitude = 1.0;
    sine.period = 25.0;

    Regime trend;
    trend.kind = RegimeKind::linear_trend;
    trend.length = 200;
    trend.slope = -0.005;

    // Negative phi keeps the AR dynamics in conflict with the smooth regimes.
    Regime ar;
    ar.kind = RegimeKind::ar1;
    ar.length = 200;
    ar.level = -1.0;
    ar.phi = -0.5;
    ar.innovation_sd = 0.3;

    std::vector<Regime> out;
    for (int i = 0; i < 10; ++i) out.push_back(i % 3 == 0 ? sine : i % 3 == 1 ? trend : ar);
    return out;
}

EngineConfig::EngineConfig() {
    synth.name = "synthetic";
    synth.regimes = default_regimes();
    synth.noise_sd = 0.05;
    synth.seed = 7;
    synth.window_len = model.input_len;
}

const std::vector<std::string>& EngineConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, _] : field_table()) out.push_back(name);
        return out;
    }();
    return k;
}

void EngineConfig::set(const std::string& key, const std::string& value) { field(trim(key)).set(*this, trim(key), value); }

std::string EngineConfig::get(const std::string& key) const { return field(key).get(*this); }

void EngineConfig::validate() const {
    model.validate();
    train.validate();
    cluster.validate();
    pool.validate();
    detector.validate();
    if (!(periodic_fraction > 0.0 && periodic_fraction <= 1.0))
        throw ConfigError("engine.periodic_fraction must lie in (0, 1]");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    (void)strategies();
    (void)model_variants();
    {
        const double sum = split.train + split.val + split.test;
        if (!(split.train > 0 && split.val > 0 && split.test > 0) || std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("split fractions must be positive and sum to 1");
    }
}

StrategyConfig EngineConfig::strategy_config(Strategy s) const {
    ModelVariant v;
    v.label = to_string(model.kind);
    v.model = model;
    v.train = train;
    return strategy_config(s, v);
}

StrategyConfig EngineConfig::strategy_config(Strategy s, const ModelVariant& variant) const {
    StrategyConfig c;
    c.strategy = s;
    c.model_label = variant.label;
    c.model = variant.model;
    c.model.input_len = model.input_len;
    c.train = variant.train;
    c.cluster = cluster;
    c.pool = pool;
    c.detector = detector;
    c.periodic_fraction = periodic_fraction;
    c.seed = seed;
    c.record_timings = record_timings;
    return c;
}

std::vector<Strategy> EngineConfig::strategies() const {
    std::vector<Strategy> out;
    for (const auto& s : split_on(compare_strategies, ','))
        if (!s.empty()) out.push_back(strategy_from_string(s));
    if (out.empty()) throw ConfigError("compare.strategies is empty");
    return out;
}

std::vector<ModelVariant> EngineConfig::model_variants() const {
    std::vector<ModelVariant> out;
    if (compare_models.empty()) {
        ModelVariant v;
        v.label = to_string(model.kind);
        v.model = model;
        v.train = train;
        out.push_back(v);
        return out;
    }
    std::set<std::string> labels;
    for (const auto& item : split_on(compare_models, ';')) {
        if (item.empty()) continue;
        auto v = parse_variant(item, *this);
        v.model.input_len = model.input_len;
        v.model.validate();
        v.train.validate();
        if (v.label.find_first_of(",/\\ ") != std::string::npos)
            throw ConfigError("model label '" + v.label + "' contains a separator character");
        if (!labels.insert(v.label).second) throw ConfigError("duplicate model label '" + v.label + "'");
        out.push_back(std::move(v));
    }
    for (const auto& v : out)
        if (!v.under_of.empty() && !labels.count(v.under_of))
            throw ConfigError("model '" + v.label + "' refers to unknown variant '" + v.under_of + "'");
    if (out.empty()) throw ConfigError("compare.models lists no models");
    return out;
}

ColumnSelector EngineConfig::column() const {
    if (!data_column.empty() && std::all_of(data_column.begin(), data_column.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        return static_cast<std::size_t>(std::stoull(data_column));
    return data_column;
}

SyntheticSpec EngineConfig::synthetic_spec() const {
    SyntheticSpec s = synth;
    s.window_len = model.input_len;
    return s;
}

std::string EngineConfig::dump() const {
    std::string out;
    for (const auto& [name, f] : field_table()) out += name + " = " + f.get(*this) + "\n";
    return out;
}

void apply_config_text(EngineConfig& config, const std::string& text, const std::string& origin) {
    std::stringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
        try {
            config.set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
        }
    }
}

void apply_config_file(EngineConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str(), path.string());
}

void apply_override(EngineConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    config.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<Regime> parse_regimes(const std::string& text) {
    std::vector<Regime> out;
    for (const auto& item : split_on(text, ';')) {
        if (item.empty()) continue;
        const auto open = item.find('(');
        const auto close = item.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open || close + 1 != item.size())
            throw ConfigError("regime '" + item + "' must look like kind(key=value,...)");
        Regime r;
        r.kind = regime_kind_from_string(trim(item.substr(0, open)));
        for (const auto& kv : split_on(item.substr(open + 1, close - open - 1), ',')) {
            if (kv.empty()) continue;
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("regime parameter '" + kv + "' is not key=value");
            const auto k = trim(kv.substr(0, eq));
            const auto v = kv.substr(eq + 1);
            const auto key = "regime " + k;
            if (k == "length") r.length = parse_number<Index>(key, v);
            else if (k == "level") r.level = parse_number<double>(key, v);
            else if (k == "amplitude") r.amplitude = parse_number<double>(key, v);
            else if (k == "period") r.period = parse_number<double>(key, v);
            else if (k == "phase") r.phase = parse_number<double>(key, v);
            else if (k == "slope") r.slope = parse_number<double>(key, v);
            else if (k == "phi") r.phi = parse_number<double>(key, v);
            else if (k == "sd") r.innovation_sd = parse_number<double>(key, v);
            else throw ConfigError("unknown regime parameter '" + k + "'");
        }
        out.push_back(r);
    }
    if (out.empty()) throw ConfigError("synth.regimes lists no regimes");
    return out;
}

std::string format_regimes(const std::vector<Regime>& regimes) {
    std::string out;
    for (const auto& r : regimes) {
        if (!out.empty()) out += ";";
        out += std::string(to_string(r.kind)) + "(length=" + std::to_string(r.length) + ",level=" + fmt(r.level);
        switch (r.kind) {
        case RegimeKind::sine:
            out += ",amplitude=" + fmt(r.amplitude) + ",period=" + fmt(r.period) + ",phase=" + fmt(r.phase);
            break;
        case RegimeKind::linear_trend: out += ",slope=" + fmt(r.slope); break;
        case RegimeKind::ar1: out += ",phi=" + fmt(r.phi) + ",sd=" + fmt(r.innovation_sd); break;
        case RegimeKind::level_shift: break;
        }
        out += ")";
    }
    return out;
}

} // namespace pft
