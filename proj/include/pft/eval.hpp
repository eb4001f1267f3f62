#pragma once

#include "pft/clustering.hpp"
#include "pft/series.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pft {

/// Root mean squared error of two equal-length, non-empty sequences.
template <typename P, typename T>
double rmse(const Eigen::MatrixBase<P>& predictions, const Eigen::MatrixBase<T>& targets) {
    if (predictions.size() != targets.size()) throw std::invalid_argument("rmse: length mismatch");
    if (predictions.size() == 0) throw std::invalid_argument("rmse: empty input");
    return std::sqrt((predictions.derived() - targets.derived()).squaredNorm() / static_cast<double>(predictions.size()));
}

/// RMSE divided by the range (max - min) of the targets.
template <typename P, typename T>
double nrmse(const Eigen::MatrixBase<P>& predictions, const Eigen::MatrixBase<T>& targets) {
    const double range = targets.maxCoeff() - targets.minCoeff();
    if (!(range > 0.0)) throw std::invalid_argument("nrmse: targets are constant");
    return rmse(predictions, targets) / range;
}

struct MetricRow {
    std::string dataset;
    std::string model;
    std::string strategy;
    double rmse = 0.0;
    double nrmse = 0.0;
    double runtime_total_s = 0.0;
    double runtime_adapt_s = 0.0;
    Index n_forecasts = 0;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Per (model, strategy) aggregate over datasets, mirroring the columns of a
/// cross-dataset comparison table. Standard deviations use n - 1 (0 for one dataset).
struct StrategySummary {
    std::string model;
    std::string strategy;
    Index datasets = 0;
    double avg_nrmse = 0.0;
    double std_nrmse = 0.0;
    double avg_local_rank = 0.0;
    double avg_global_rank = 0.0;
    double std_global_rank = 0.0;
    double avg_runtime_total_s = 0.0;
    double avg_runtime_adapt_s = 0.0;

    friend bool operator==(const StrategySummary&, const StrategySummary&) = default;
};

struct EvaluationReport {
    std::vector<MetricRow> rows;
    /// Rank of rows[i] among the strategies of the same model on the same dataset.
    std::vector<double> local_ranks;
    /// Rank of rows[i] among all (model, strategy) pairs on the same dataset.
    std::vector<double> global_ranks;
    std::vector<StrategySummary> summary;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Ascending ranks 1..n; tied values share the average of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Orders rows by (dataset, model, strategy), computes per-dataset local and
/// global nRMSE ranks and their cross-dataset averages. Every (model,
/// strategy) pair must cover the same datasets exactly once.
EvaluationReport rank(std::vector<MetricRow> rows);

/// Optimized vs under-optimized comparison row (base and online nRMSE of both).
struct PairedRow {
    std::string model;
    double base_opt = 0.0;
    double online_opt = 0.0;
    double base_under = 0.0;
    double online_under = 0.0;
};

/// One PairedRow per (optimized label, under-optimized label) pair whose
/// base_tune and online_tune summaries are present.
std::vector<PairedRow> paired_comparison(const EvaluationReport& report,
                                         const std::vector<std::pair<std::string, std::string>>& pairs);

inline constexpr const char* metrics_csv_header =
    "dataset,model,strategy,rmse,nrmse,runtime_total_s,runtime_adapt_s,n_forecasts";

/// Paths written by emit_report.
struct ReportFiles {
    std::filesystem::path metrics_csv;
    std::filesystem::path summary_csv;
    std::filesystem::path json;
};

/// Writes metrics.csv (one MetricRow per line), summary.csv and report.json into `dir`.
ReportFiles emit_report(const EvaluationReport& report, const std::filesystem::path& dir);
void write_paired_csv(const std::vector<PairedRow>& rows, const std::filesystem::path& path);

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);
EvaluationReport read_report_json(const std::filesystem::path& path);

/// Plot data for a clustering: one CSV per cluster holding its member traces
/// and the centroid row (is_centroid = 1). Returns the files written.
std::vector<std::filesystem::path> write_cluster_traces(const std::vector<Subsequence>& subsequences,
                                                        const Clustering& clustering,
                                                        const std::filesystem::path& dir);

} // namespace pft
