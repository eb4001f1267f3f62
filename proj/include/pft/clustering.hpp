#pragma once

#include "pft/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pft {

/// Euclidean distance between two equal-length vectors or vector expressions.
template <typename A, typename B>
double euclidean(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("euclidean: length mismatch");
    return (a.derived() - b.derived()).norm();
}

inline double euclidean(const Subsequence& a, const Subsequence& b) { return euclidean(a.values, b.values); }

/// Index of the nearest row of `centroids` and the distance to it. Ties go to
/// the lowest row index.
std::pair<Index, double> nearest_centroid(const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                                          const Eigen::Ref<const Eigen::VectorXd>& point);

struct Cluster {
    Eigen::VectorXd centroid;
    std::vector<Index> members;

    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(members.size()); }
};

struct Clustering {
    std::vector<Cluster> clusters;
    double inertia = 0.0;
    Index n_min = 1;

    [[nodiscard]] Index k() const noexcept { return static_cast<Index>(clusters.size()); }
    /// k x d matrix of centroids.
    [[nodiscard]] Eigen::MatrixXd centroids() const;
    /// Cluster index of every point, for `n` points.
    [[nodiscard]] std::vector<Index> assignment(Index n) const;
};

struct KMeansConfig {
    Index k = 2;
    int max_iter = 100;
    int restarts = 5;
    std::uint64_t seed = 0;
};

struct XMeansConfig {
    Index k_min = 2;
    Index k_max = 8;
    int max_iter = 100;
    int restarts = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Lloyd's algorithm from given initial centroids (rows). `inertia_trace`,
/// when given, receives the inertia after the initial assignment and after
/// every centroid update. A cluster emptied during iteration is reseeded
/// with the point farthest from its own centroid.
Clustering lloyd(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::MatrixXd centroids, int max_iter,
                 std::vector<double>* inertia_trace = nullptr);

/// k-means++ seeding followed by Lloyd; best of `restarts` runs by inertia
/// (lowest restart index on ties). Points are rows.
Clustering kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const KMeansConfig& config);

/// Bayesian information criterion of a hard spherical-Gaussian clustering:
/// logL - q/2 ln n with sigma^2 = SSE / (n - K) and q = (K-1) + K*d + 1.
double bic(const Eigen::Ref<const Eigen::MatrixXd>& points, const Clustering& clustering);

/// Chooses K in [k_min, k_max] by recursive BIC-tested 2-means splits.
Clustering xmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const XMeansConfig& config);

/// Repeatedly merges the smallest cluster below `n_min` into the cluster with
/// the nearest centroid until every cluster reaches n_min or one cluster is left.
Clustering enforce_min_size(Clustering clustering, Index n_min);

enum class InterClusterMode { mean, min };

/// Mean (or minimum) Euclidean distance over all unordered centroid pairs.
/// Requires at least two centroids.
double inter_cluster_distance(const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                              InterClusterMode mode = InterClusterMode::mean);
inline double inter_cluster_distance(const Clustering& clustering, InterClusterMode mode = InterClusterMode::mean) {
    return inter_cluster_distance(clustering.centroids(), mode);
}

/// Mean distance from each point to its cluster centroid.
double mean_within_cluster_distance(const Eigen::Ref<const Eigen::MatrixXd>& points, const Clustering& clustering);

const char* to_string(InterClusterMode mode) noexcept;
InterClusterMode inter_cluster_mode_from_string(const std::string& text);

} // namespace pft
