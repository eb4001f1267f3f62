#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pft {

using Index = Eigen::Index;

/// Min-max statistics of the training split. Scaling maps [min, max] onto
/// [0, 1]; values outside the training range extend affinely.
struct ScaleStats {
    double min = 0.0;
    double max = 1.0;

    [[nodiscard]] double scale(double x) const noexcept { return (x - min) / (max - min); }
    [[nodiscard]] double inverse(double y) const noexcept { return y * (max - min) + min; }
};

struct TimeSeries {
    std::string name;
    Eigen::VectorXd values;
    std::optional<ScaleStats> scale_stats;

    [[nodiscard]] Index size() const noexcept { return values.size(); }
};

/// Half-open index range [begin, end).
struct IndexRange {
    Index begin = 0;
    Index end = 0;

    [[nodiscard]] Index size() const noexcept { return end - begin; }
    [[nodiscard]] bool contains(Index i) const noexcept { return i >= begin && i < end; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SplitFractions {
    double train = 0.4;
    double val = 0.4;
    double test = 0.2;
};

struct SeriesSplit {
    IndexRange train;
    IndexRange val;
    IndexRange test;
    SplitFractions fractions;
};

/// A length-p window of a parent series starting at `origin`.
struct Subsequence {
    Eigen::VectorXd values;
    Index origin = 0;
};

/// Selects a CSV column by header name or zero-based index.
using ColumnSelector = std::variant<std::string, std::size_t>;

/// Smallest series length for which every split can hold a usable window.
[[nodiscard]] constexpr Index min_series_length(Index p) noexcept { return 3 * p + 3; }

/// Reads one column of a comma-separated file. A first row whose fields do
/// not all parse as numbers is taken as the header. Unparseable cells are an
/// error naming their 1-based line. When `window_len` is set, fewer than
/// 3p+3 rows is an error.
TimeSeries load_csv(const std::filesystem::path& path, const ColumnSelector& column,
                    std::optional<Index> window_len = std::nullopt);

/// Writes `value` header plus one observation per line.
void write_csv(const std::filesystem::path& path, const TimeSeries& series);

/// Contiguous train/val/test partition. Train and val sizes are floored,
/// the remainder goes to test. Every part must hold at least p+1 points.
SeriesSplit split(Index n, const SplitFractions& fractions, Index p);
inline SeriesSplit split(const TimeSeries& series, const SplitFractions& fractions, Index p) {
    return split(series.size(), fractions, p);
}

/// Returns a copy of `series` min-max scaled with statistics of the train range.
TimeSeries fit_scaler(const TimeSeries& series, const SeriesSplit& split);

/// floor(|range| / p) consecutive windows starting at range.begin; the
/// trailing remainder is dropped.
std::vector<Subsequence> segment_nonoverlapping(const Eigen::VectorXd& values, IndexRange range, Index p);

/// The window [x_{t-p+1}, ..., x_t].
Subsequence window_at(const Eigen::VectorXd& values, Index t, Index p);

/// Stacks subsequences as the rows of an n x p matrix.
Eigen::MatrixXd stack_rows(const std::vector<Subsequence>& subsequences);

enum class RegimeKind { sine, linear_trend, ar1, level_shift };

/// One segment of a synthetic series. Which fields apply depends on `kind`:
///   sine:         level + amplitude * sin(2*pi*i/period + phase)
///   linear_trend: level + slope * i
///   ar1:          y_i = level + phi * (y_{i-1} - level) + N(0, innovation_sd), y_{-1} = level
///   level_shift:  level
struct Regime {
    RegimeKind kind = RegimeKind::sine;
    Index length = 100;
    double level = 0.0;
    double amplitude = 1.0;
    double period = 20.0;
    double phase = 0.0;
    double slope = 0.0;
    double phi = 0.5;
    double innovation_sd = 0.1;
};

struct SyntheticSpec {
    std::string name = "synthetic";
    std::vector<Regime> regimes;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    Index window_len = 10;
};

/// Concatenates the regime segments and adds N(0, noise_sd) noise.
/// Deterministic for a fixed seed.
TimeSeries make_synthetic(const SyntheticSpec& spec);

const char* to_string(RegimeKind kind) noexcept;
RegimeKind regime_kind_from_string(const std::string& text);

} // namespace pft
