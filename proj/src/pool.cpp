#include "pft/pool.hpp"

#include "pft/error.hpp"
#include "pft/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pft {

void ClusterConfig::validate() const {
    xmeans.validate();
    if (!(n_min_fraction > 0.0 && n_min_fraction <= 1.0)) throw ConfigError("cluster.n_min_fraction must lie in (0, 1]");
}

void PoolConfig::validate() const {
    if (!(tau_fraction > 0.0)) throw ConfigError("pool.tau_fraction must be positive");
    if (recent_len < 0) throw ConfigError("pool.recent_len must be >= 0");
    if (max_size < 1) throw ConfigError("pool.max_size must be >= 1");
}

void RecentBuffer::push(double x) {
    if (capacity_ <= 0) return;
    if (static_cast<Index>(data_.size()) == capacity_) data_.pop_front();
    data_.push_back(x);
}

Eigen::VectorXd RecentBuffer::tail(std::optional<Index> count) const {
    const Index n = std::clamp<Index>(count.value_or(size()), 0, size());
    Eigen::VectorXd out(n);
    const auto start = data_.size() - static_cast<std::size_t>(n);
    for (Index i = 0; i < n; ++i) out[i] = data_[start + static_cast<std::size_t>(i)];
    return out;
}

Eigen::MatrixXd SpecialistPool::centroids() const {
    if (specialists.empty()) return {};
    Eigen::MatrixXd m(size(), specialists.front().centroid.size());
    for (Index i = 0; i < size(); ++i) m.row(i) = specialists[static_cast<std::size_t>(i)].centroid.transpose();
    return m;
}

const Specialist& SpecialistPool::by_id(int id) const {
    for (const auto& s : specialists)
        if (s.id == id) return s;
    throw std::out_of_range("no specialist with id " + std::to_string(id));
}

const char* to_string(AdaptTrigger trigger) noexcept { return trigger == AdaptTrigger::drift ? "drift" : "periodic"; }

namespace {

std::uint64_t specialist_seed(const TrainConfig& train, int id) {
    return derive_seed(derive_seed(train.seed, seed_stream::fine_tune), static_cast<std::uint64_t>(id));
}

std::vector<Subsequence> members_of(const std::vector<Subsequence>& subsequences, const Cluster& cluster) {
    std::vector<Subsequence> out;
    out.reserve(cluster.members.size());
    for (Index m : cluster.members) out.push_back(subsequences[static_cast<std::size_t>(m)]);
    return out;
}

void refresh_tau(SpecialistPool& pool) {
    if (pool.size() >= 2) pool.tau = pool.tau_fraction * inter_cluster_distance(pool.centroids(), pool.inter_mode);
}

} // namespace

Clustering cluster_subsequences(const std::vector<Subsequence>& subsequences, const ClusterConfig& config) {
    config.validate();
    const auto count = static_cast<Index>(subsequences.size());
    if (count == 0) throw DataError("no subsequences to cluster");
    XMeansConfig xm = config.xmeans;
    xm.k_min = std::min(xm.k_min, count);
    xm.k_max = std::max(xm.k_min, std::min(xm.k_max, count));
    const auto n_min = std::max<Index>(1, static_cast<Index>(std::ceil(config.n_min_fraction * static_cast<double>(count))));
    return enforce_min_size(xmeans(stack_rows(subsequences), xm), n_min);
}

SpecialistPool build_offline(const WeightVector& base, const Eigen::VectorXd& values, IndexRange val_range,
                             const TrainConfig& train, const ClusterConfig& cluster, const PoolConfig& pool_config,
                             Clustering* clustering_out) {
    pool_config.validate();
    const Index p = base.spec.input_len;
    const auto subsequences = segment_nonoverlapping(values, val_range, p);
    Clustering clustering = cluster_subsequences(subsequences, cluster);

    SpecialistPool pool;
    pool.spec = base.spec;
    pool.base_weights = clone_transfer(base);
    pool.tau_fraction = pool_config.tau_fraction;
    pool.inter_mode = cluster.inter_mode;
    pool.max_size = pool_config.max_size;
    pool.recent = RecentBuffer(pool_config.recent_len > 0 ? pool_config.recent_len : 10 * p);

    for (const auto& c : clustering.clusters) {
        const SampleSet samples = subsequence_samples(values, members_of(subsequences, c), val_range);
        Specialist s;
        s.id = pool.next_id++;
        s.centroid = c.centroid;
        s.fine_tune_seed = specialist_seed(train, s.id);
        s.train_count = samples.size();
        TrainConfig ft = train;
        ft.seed = s.fine_tune_seed;
        s.weights = samples.empty() ? clone_transfer(base) : fine_tune(ft, base, samples);
        pool.specialists.push_back(std::move(s));
    }
    if (pool.size() > pool.max_size)
        throw Error("offline clustering produced " + std::to_string(pool.size()) +
                    " specialists, above pool.max_size = " + std::to_string(pool.max_size));

    if (pool.size() >= 2) {
        refresh_tau(pool);
    } else {
        pool.tau = pool.tau_fraction * mean_within_cluster_distance(stack_rows(subsequences), clustering);
    }
    if (clustering_out) *clustering_out = std::move(clustering);
    return pool;
}

Selection select(const SpecialistPool& pool, const Eigen::Ref<const Eigen::VectorXd>& window) {
    if (pool.specialists.empty()) throw std::logic_error("select on an empty specialist pool");
    Selection best;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.specialists.size(); ++i) {
        const auto& c = pool.specialists[i].centroid;
        if (c.size() != window.size()) throw std::invalid_argument("window length does not match the centroids");
        const double sq = (c - window).squaredNorm();
        if (sq < best_sq) {
            best_sq = sq;
            best.index = i;
        }
    }
    best.id = pool.specialists[best.index].id;
    best.distance = std::sqrt(best_sq);
    return best;
}

double forecast(const SpecialistPool& pool, const Eigen::Ref<const Eigen::VectorXd>& window) {
    return predict(pool.specialists[select(pool, window).index].weights, window);
}

AdaptationReport adapt(SpecialistPool& pool, const Eigen::VectorXd& recent, AdaptTrigger trigger, Index step,
                       const TrainConfig& train, const ClusterConfig& cluster) {
    AdaptationReport report;
    report.trigger = trigger;
    const Index p = pool.spec.input_len;
    if (recent.size() < 2 * p) {
        report.skipped = true;
        return report;
    }

    // Anchor segments at the newest end so the last member's target is the newest observation.
    const IndexRange usable{(recent.size() - 1) % p, recent.size()};
    const auto subsequences = segment_nonoverlapping(recent, usable, p);
    const auto count = static_cast<Index>(subsequences.size());
    ClusterConfig local = cluster;
    local.xmeans.seed = derive_seed(derive_seed(cluster.xmeans.seed, seed_stream::adaptation),
                                    static_cast<std::uint64_t>(pool.adaptations));
    ++pool.adaptations;
    local.xmeans.k_min = std::min(local.xmeans.k_min, count);
    local.xmeans.k_max = std::max(local.xmeans.k_min, std::min(local.xmeans.k_max, count));
    const auto n_min = std::max<Index>(2, static_cast<Index>(std::ceil(0.10 * static_cast<double>(count))));
    const Clustering clustering = enforce_min_size(xmeans(stack_rows(subsequences), local.xmeans), n_min);
    report.recluster_k = clustering.k();

    for (const auto& c : clustering.clusters) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& s : pool.specialists) nearest = std::min(nearest, euclidean(c.centroid, s.centroid));
        if (!(nearest > pool.tau)) {
            ++report.fused;
            continue;
        }
        SampleSet samples = subsequence_samples(recent, members_of(subsequences, c), {0, recent.size()});
        if (samples.empty()) {
            ++report.unfit;
            continue;
        }
        if (pool.size() >= pool.max_size)
            throw Error("specialist pool reached pool.max_size = " + std::to_string(pool.max_size) + " at step " +
                        std::to_string(step));

        Specialist s;
        s.id = pool.next_id++;
        s.centroid = c.centroid;
        s.fine_tune_seed = specialist_seed(train, s.id);
        s.train_count = samples.size();
        s.created_at = step;
        TrainConfig ft = train;
        ft.seed = s.fine_tune_seed;
        s.weights = fine_tune(ft, pool.base_weights, samples);

        report.new_specialists.push_back(s.id);
        report.spawned.push_back({s.id, s.fine_tune_seed, std::move(samples)});
        pool.specialists.push_back(std::move(s));
    }
    refresh_tau(pool);
    return report;
}

} // namespace pft
