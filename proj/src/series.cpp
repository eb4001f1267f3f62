#include "pft/series.hpp"

#include "pft/error.hpp"
#include "pft/random.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace pft {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_real(std::string_view text) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

} // namespace

TimeSeries load_csv(const std::filesystem::path& path, const ColumnSelector& column,
                    std::optional<Index> window_len) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");

    std::vector<double> values;
    std::optional<std::size_t> col_index;
    if (const auto* idx = std::get_if<std::size_t>(&column)) col_index = *idx;

    std::string line;
    std::size_t line_no = 0;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);

        if (first_row) {
            first_row = false;
            bool numeric = true;
            for (auto f : fields) numeric = numeric && parse_real(f).has_value();
            if (!numeric) {
                if (const auto* name = std::get_if<std::string>(&column)) {
                    for (std::size_t i = 0; i < fields.size(); ++i)
                        if (fields[i] == *name) col_index = i;
                    if (!col_index)
                        throw DataError("column '" + *name + "' not found in header of '" + path.string() + "'");
                } else if (*col_index >= fields.size()) {
                    throw DataError("column index " + std::to_string(*col_index) + " out of range in '" +
                                    path.string() + "'");
                }
                continue;
            }
            if (std::holds_alternative<std::string>(column))
                throw DataError("'" + path.string() + "' has no header row; cannot select column '" +
                                std::get<std::string>(column) + "' by name");
        }

        if (*col_index >= fields.size())
            throw DataError("row " + std::to_string(line_no) + " of '" + path.string() + "' has no column " +
                            std::to_string(*col_index));
        const auto value = parse_real(fields[*col_index]);
        if (!value || !std::isfinite(*value))
            throw DataError("non-numeric value '" + std::string(fields[*col_index]) + "' at row " +
                            std::to_string(line_no) + " of '" + path.string() + "'");
        values.push_back(*value);
    }

    if (window_len && static_cast<Index>(values.size()) < min_series_length(*window_len))
        throw DataError("'" + path.string() + "' has " + std::to_string(values.size()) +
                        " rows; at least " + std::to_string(min_series_length(*window_len)) + " are required");

    TimeSeries series;
    series.name = path.stem().string();
    series.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
    return series;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "value\n";
    out.precision(17);
    for (Index i = 0; i < series.size(); ++i) out << series.values[i] << '\n';
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

SeriesSplit split(Index n, const SplitFractions& fractions, Index p) {
    const double sum = fractions.train + fractions.val + fractions.test;
    if (fractions.train <= 0 || fractions.val <= 0 || fractions.test <= 0 || std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split fractions must be positive and sum to 1");
    if (p < 1) throw ConfigError("window length p must be at least 1");

    const auto n_train = static_cast<Index>(std::floor(fractions.train * static_cast<double>(n)));
    const auto n_val = static_cast<Index>(std::floor(fractions.val * static_cast<double>(n)));

    SeriesSplit s;
    s.train = {0, n_train};
    s.val = {n_train, n_train + n_val};
    s.test = {n_train + n_val, n};
    s.fractions = fractions;

    const auto check = [&](const char* name, const IndexRange& r) {
        if (r.size() < p + 1)
            throw DataError(std::string(name) + " split has " + std::to_string(r.size()) +
                            " points; at least p+1 = " + std::to_string(p + 1) + " are required");
    };
    check("train", s.train);
    check("validation", s.val);
    check("test", s.test);
    return s;
}

TimeSeries fit_scaler(const TimeSeries& series, const SeriesSplit& split) {
    const auto train = series.values.segment(split.train.begin, split.train.size());
    const ScaleStats stats{train.minCoeff(), train.maxCoeff()};
    if (!(stats.max > stats.min)) throw DataError("train split of '" + series.name + "' is constant; cannot scale");

    TimeSeries scaled = series;
    scaled.values = series.values.unaryExpr([&](double x) { return stats.scale(x); });
    scaled.scale_stats = stats;
    return scaled;
}

std::vector<Subsequence> segment_nonoverlapping(const Eigen::VectorXd& values, IndexRange range, Index p) {
    if (p < 1) throw ConfigError("window length p must be at least 1");
    if (range.begin < 0 || range.end > values.size() || range.size() < p)
        throw DataError("range of " + std::to_string(range.size()) + " points is shorter than p = " +
                        std::to_string(p));
    const Index count = range.size() / p;
    std::vector<Subsequence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
        const Index origin = range.begin + i * p;
        out.push_back({values.segment(origin, p), origin});
    }
    return out;
}

Subsequence window_at(const Eigen::VectorXd& values, Index t, Index p) {
    if (t < p - 1 || t >= values.size())
        throw DataError("no full window of length " + std::to_string(p) + " ends at index " + std::to_string(t));
    return {values.segment(t - p + 1, p), t - p + 1};
}

Eigen::MatrixXd stack_rows(const std::vector<Subsequence>& subsequences) {
    if (subsequences.empty()) return {};
    Eigen::MatrixXd m(static_cast<Index>(subsequences.size()), subsequences.front().values.size());
    for (std::size_t i = 0; i < subsequences.size(); ++i) m.row(static_cast<Index>(i)) = subsequences[i].values.transpose();
    return m;
}

const char* to_string(RegimeKind kind) noexcept {
    switch (kind) {
    case RegimeKind::sine: return "sine";
    case RegimeKind::linear_trend: return "trend";
    case RegimeKind::ar1: return "ar1";
    case RegimeKind::level_shift: return "level";
    }
    return "?";
}

RegimeKind regime_kind_from_string(const std::string& text) {
    if (text == "sine") return RegimeKind::sine;
    if (text == "trend" || text == "linear_trend" || text == "linear-trend") return RegimeKind::linear_trend;
    if (text == "ar1") return RegimeKind::ar1;
    if (text == "level" || text == "level_shift" || text == "level-shift") return RegimeKind::level_shift;
    throw ConfigError("unknown regime kind '" + text + "'");
}

TimeSeries make_synthetic(const SyntheticSpec& spec) {
    if (spec.regimes.empty()) throw ConfigError("synthetic spec needs at least one regime");
    if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) throw ConfigError("noise_sd must be finite and >= 0");

    Index total = 0;
    for (const auto& r : spec.regimes) {
        if (r.length < 2 * spec.window_len)
            throw ConfigError(std::string(to_string(r.kind)) + " regime length " + std::to_string(r.length) +
                              " is shorter than 2p = " + std::to_string(2 * spec.window_len));
        const bool finite = std::isfinite(r.level) && std::isfinite(r.amplitude) && std::isfinite(r.phase) &&
                            std::isfinite(r.slope) && std::isfinite(r.phi) && std::isfinite(r.innovation_sd);
        if (!finite) throw ConfigError("regime parameters must be finite");
        if (r.kind == RegimeKind::sine && !(r.period > 0.0)) throw ConfigError("sine period must be positive");
        if (r.kind == RegimeKind::ar1 && !(std::abs(r.phi) < 1.0)) throw ConfigError("ar1 requires |phi| < 1");
        if (r.kind == RegimeKind::ar1 && r.innovation_sd < 0.0) throw ConfigError("ar1 innovation_sd must be >= 0");
        total += r.length;
    }

    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd values(total);
    Index at = 0;
    for (const auto& r : spec.regimes) {
        double prev = r.level;
        for (Index i = 0; i < r.length; ++i) {
            double x = 0.0;
            switch (r.kind) {
            case RegimeKind::sine:
                x = r.level + r.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / r.period + r.phase);
                break;
            case RegimeKind::linear_trend: x = r.level + r.slope * static_cast<double>(i); break;
            case RegimeKind::ar1:
                x = r.level + r.phi * (prev - r.level) + r.innovation_sd * normal(rng);
                prev = x;
                break;
            case RegimeKind::level_shift: x = r.level; break;
            }
            values[at++] = x;
        }
    }
    if (spec.noise_sd > 0.0)
        for (Index i = 0; i < total; ++i) values[i] += spec.noise_sd * normal(rng);

    return {spec.name, std::move(values), std::nullopt};
}

} // namespace pft
