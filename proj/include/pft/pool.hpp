#pragma once

#include "pft/clustering.hpp"
#include "pft/forecaster.hpp"
#include "pft/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace pft {

struct ClusterConfig {
    XMeansConfig xmeans;
    /// n_min = ceil(n_min_fraction * number of validation subsequences).
    double n_min_fraction = 0.10;
    InterClusterMode inter_mode = InterClusterMode::mean;

    void validate() const;
};

struct PoolConfig {
    /// tau = tau_fraction * inter-cluster distance.
    double tau_fraction = 0.20;
    /// Capacity of the recent-observation buffer; 0 means 10 * p.
    Index recent_len = 0;
    /// Adaptation aborts instead of growing the pool beyond this many specialists.
    Index max_size = 32;

    void validate() const;
};

/// Fixed-capacity FIFO of the newest raw observations.
class RecentBuffer {
public:
    explicit RecentBuffer(Index capacity = 0) : capacity_(capacity) {}

    void push(double x);
    [[nodiscard]] Index capacity() const noexcept { return capacity_; }
    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(data_.size()); }
    /// The newest `count` observations, oldest first (all of them by default).
    [[nodiscard]] Eigen::VectorXd tail(std::optional<Index> count = std::nullopt) const;

private:
    Index capacity_;
    std::deque<double> data_;
};

struct Specialist {
    int id = 0;
    Eigen::VectorXd centroid;
    WeightVector weights;
    Index train_count = 0;
    /// Stream step of the adaptation that spawned it; empty for offline specialists.
    std::optional<Index> created_at;
    std::uint64_t fine_tune_seed = 0;
};

struct SpecialistPool {
    ModelSpec spec;
    WeightVector base_weights;
    std::vector<Specialist> specialists;
    double tau = 0.0;
    double tau_fraction = 0.20;
    InterClusterMode inter_mode = InterClusterMode::mean;
    Index max_size = 32;
    RecentBuffer recent;
    int next_id = 0;
    Index adaptations = 0;

    [[nodiscard]] Eigen::MatrixXd centroids() const;
    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(specialists.size()); }
    [[nodiscard]] const Specialist& by_id(int id) const;
};

enum class AdaptTrigger { drift, periodic };
const char* to_string(AdaptTrigger trigger) noexcept;

/// Everything needed to replay the fine-tuning of one spawned specialist.
struct SpawnRecord {
    int id = 0;
    std::uint64_t seed = 0;
    SampleSet samples;
};

struct AdaptationReport {
    std::vector<int> new_specialists;
    Index fused = 0;
    /// Proposed clusters that were distinct but had no supervised samples.
    Index unfit = 0;
    Index recluster_k = 0;
    AdaptTrigger trigger = AdaptTrigger::drift;
    /// True when the recent buffer was too short to re-cluster.
    bool skipped = false;
    std::vector<SpawnRecord> spawned;
};

struct Selection {
    std::size_t index = 0;
    int id = 0;
    double distance = 0.0;
};

/// X-means over the subsequences followed by min-size enforcement with
/// n_min = max(1, ceil(n_min_fraction * count)).
Clustering cluster_subsequences(const std::vector<Subsequence>& subsequences, const ClusterConfig& config);

/// Segments the validation range, clusters it, and fine-tunes one specialist
/// per surviving cluster from the base weights. `values` is the scaled series.
SpecialistPool build_offline(const WeightVector& base, const Eigen::VectorXd& values, IndexRange val_range,
                             const TrainConfig& train, const ClusterConfig& cluster, const PoolConfig& pool_config,
                             Clustering* clustering_out = nullptr);

/// Nearest centroid; ties go to the specialist listed first (lowest id).
Selection select(const SpecialistPool& pool, const Eigen::Ref<const Eigen::VectorXd>& window);

double forecast(const SpecialistPool& pool, const Eigen::Ref<const Eigen::VectorXd>& window);

/// Re-clusters `recent` (scaled observations) and adds a specialist for every
/// proposed centroid farther than tau from all existing ones.
AdaptationReport adapt(SpecialistPool& pool, const Eigen::VectorXd& recent, AdaptTrigger trigger, Index step,
                       const TrainConfig& train, const ClusterConfig& cluster);

} // namespace pft
