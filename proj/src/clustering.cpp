#include "pft/clustering.hpp"

#include "pft/error.hpp"
#include "pft/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pft {

std::pair<Index, double> nearest_centroid(const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                                          const Eigen::Ref<const Eigen::VectorXd>& point) {
    if (centroids.rows() == 0) throw std::invalid_argument("nearest_centroid: no centroids");
    if (centroids.cols() != point.size()) throw std::invalid_argument("nearest_centroid: length mismatch");
    Index best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < centroids.rows(); ++k) {
        const double sq = (centroids.row(k).transpose() - point).squaredNorm();
        if (sq < best_sq) {
            best_sq = sq;
            best = k;
        }
    }
    return {best, std::sqrt(best_sq)};
}

Eigen::MatrixXd Clustering::centroids() const {
    if (clusters.empty()) return {};
    Eigen::MatrixXd m(k(), clusters.front().centroid.size());
    for (Index i = 0; i < k(); ++i) m.row(i) = clusters[static_cast<std::size_t>(i)].centroid.transpose();
    return m;
}

std::vector<Index> Clustering::assignment(Index n) const {
    std::vector<Index> out(static_cast<std::size_t>(n), -1);
    for (Index c = 0; c < k(); ++c)
        for (Index m : clusters[static_cast<std::size_t>(c)].members) out[static_cast<std::size_t>(m)] = c;
    return out;
}

void XMeansConfig::validate() const {
    if (k_min < 1) throw ConfigError("cluster.k_min must be >= 1");
    if (k_max < k_min) throw ConfigError("cluster.k_max must be >= cluster.k_min");
    if (max_iter < 1) throw ConfigError("cluster.max_iter must be >= 1");
    if (restarts < 1) throw ConfigError("cluster.restarts must be >= 1");
}

namespace {

std::vector<Index> assign_nearest(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::MatrixXd& centroids) {
    std::vector<Index> labels(static_cast<std::size_t>(points.rows()));
    for (Index i = 0; i < points.rows(); ++i)
        labels[static_cast<std::size_t>(i)] = nearest_centroid(centroids, points.row(i).transpose()).first;
    return labels;
}

double inertia_of(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<Index>& labels,
                  const Eigen::MatrixXd& centroids) {
    double total = 0.0;
    for (Index i = 0; i < points.rows(); ++i)
        total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

// Gives every empty cluster the point farthest from its current centroid,
// taken from a cluster that can spare it.
void reseed_empty(const Eigen::Ref<const Eigen::MatrixXd>& points, std::vector<Index>& labels,
                  Eigen::MatrixXd& centroids) {
    const Index k = centroids.rows();
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (Index l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (Index c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Index far = -1;
        double far_sq = -1.0;
        for (Index i = 0; i < points.rows(); ++i) {
            const Index owner = labels[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
            const double sq = (points.row(i) - centroids.row(owner)).squaredNorm();
            if (sq > far_sq) {
                far_sq = sq;
                far = i;
            }
        }
        if (far < 0) continue;
        --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
        labels[static_cast<std::size_t>(far)] = c;
        sizes[static_cast<std::size_t>(c)] = 1;
        centroids.row(c) = points.row(far);
    }
}

void update_means(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<Index>& labels,
                  Eigen::MatrixXd& centroids) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), centroids.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(centroids.rows());
    for (Index i = 0; i < points.rows(); ++i) {
        const Index l = labels[static_cast<std::size_t>(i)];
        sums.row(l) += points.row(i);
        counts[l] += 1.0;
    }
    for (Index c = 0; c < centroids.rows(); ++c)
        if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];
}

Clustering package(const std::vector<Index>& labels, const Eigen::MatrixXd& centroids, double inertia) {
    Clustering out;
    out.clusters.resize(static_cast<std::size_t>(centroids.rows()));
    for (Index c = 0; c < centroids.rows(); ++c) out.clusters[static_cast<std::size_t>(c)].centroid = centroids.row(c).transpose();
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.clusters[static_cast<std::size_t>(labels[i])].members.push_back(static_cast<Index>(i));
    out.inertia = inertia;
    return out;
}

Eigen::MatrixXd seed_plus_plus(const Eigen::Ref<const Eigen::MatrixXd>& points, Index k, Rng& rng) {
    const Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centroids.row(0) = points.row(pick(rng));

    Eigen::VectorXd d2(n);
    for (Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index chosen = n - 1;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centroids.row(c) = points.row(chosen);
        for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

} // namespace

Clustering lloyd(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::MatrixXd centroids, int max_iter,
                 std::vector<double>* inertia_trace) {
    if (centroids.rows() < 1 || centroids.rows() > points.rows())
        throw DataError("cannot form " + std::to_string(centroids.rows()) + " clusters from " +
                        std::to_string(points.rows()) + " points");
    if (centroids.cols() != points.cols()) throw std::invalid_argument("lloyd: dimension mismatch");

    std::vector<Index> labels = assign_nearest(points, centroids);
    if (inertia_trace) inertia_trace->push_back(inertia_of(points, labels, centroids));

    for (int it = 0; it < max_iter; ++it) {
        reseed_empty(points, labels, centroids);
        update_means(points, labels, centroids);
        if (inertia_trace) inertia_trace->push_back(inertia_of(points, labels, centroids));
        auto next = assign_nearest(points, centroids);
        if (next == labels) break;
        labels = std::move(next);
        if (it + 1 == max_iter) {
            reseed_empty(points, labels, centroids);
            update_means(points, labels, centroids);
        }
    }
    return package(labels, centroids, inertia_of(points, labels, centroids));
}

Clustering kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const KMeansConfig& config) {
    if (config.k < 1) throw ConfigError("k must be >= 1");
    if (config.k > points.rows())
        throw DataError("k = " + std::to_string(config.k) + " exceeds the " + std::to_string(points.rows()) +
                        " points to cluster");
    Clustering best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, config.restarts); ++r) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
        Clustering run = lloyd(points, seed_plus_plus(points, config.k, rng), config.max_iter);
        if (run.inertia < best_inertia) {
            best_inertia = run.inertia;
            best = std::move(run);
        }
    }
    return best;
}

double bic(const Eigen::Ref<const Eigen::MatrixXd>& points, const Clustering& clustering) {
    const auto n = static_cast<double>(points.rows());
    const auto k = static_cast<double>(clustering.k());
    const auto d = static_cast<double>(points.cols());
    if (n <= k) return -std::numeric_limits<double>::infinity();

    double sse = 0.0;
    for (const auto& c : clustering.clusters)
        for (Index m : c.members) sse += (points.row(m).transpose() - c.centroid).squaredNorm();
    const double variance = std::max(sse / (n - k), 1e-12);

    double log_l = -0.5 * n * d * std::log(2.0 * std::numbers::pi * variance) - sse / (2.0 * variance);
    for (const auto& c : clustering.clusters) {
        const auto nj = static_cast<double>(c.size());
        if (nj > 0) log_l += nj * std::log(nj / n);
    }
    const double q = (k - 1.0) + k * d + 1.0;
    return log_l - 0.5 * q * std::log(n);
}

Clustering xmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const XMeansConfig& config) {
    config.validate();
    if (points.rows() < config.k_min)
        throw DataError("x-means needs at least k_min = " + std::to_string(config.k_min) + " points");

    Clustering current = kmeans(points, {config.k_min, config.max_iter, config.restarts, config.seed});
    for (std::uint64_t round = 1; current.k() < config.k_max; ++round) {
        struct Proposal {
            Index cluster;
            double gain;
            Eigen::MatrixXd children;
        };
        std::vector<Proposal> proposals;
        for (Index c = 0; c < current.k(); ++c) {
            const auto& members = current.clusters[static_cast<std::size_t>(c)].members;
            if (members.size() < 3) continue;
            Eigen::MatrixXd local(static_cast<Index>(members.size()), points.cols());
            for (std::size_t i = 0; i < members.size(); ++i) local.row(static_cast<Index>(i)) = points.row(members[i]);

            Clustering parent;
            parent.clusters.push_back({local.colwise().mean().transpose(), {}});
            for (Index i = 0; i < local.rows(); ++i) parent.clusters.front().members.push_back(i);

            const Clustering split = kmeans(
                local, {2, config.max_iter, config.restarts,
                        derive_seed(config.seed, round * 1000003ULL + static_cast<std::uint64_t>(c))});
            const double gain = bic(local, split) - bic(local, parent);
            if (gain > 0.0) proposals.push_back({c, gain, split.centroids()});
        }
        if (proposals.empty()) break;

        std::stable_sort(proposals.begin(), proposals.end(),
                         [](const Proposal& a, const Proposal& b) { return a.gain > b.gain; });
        proposals.resize(std::min<std::size_t>(proposals.size(), static_cast<std::size_t>(config.k_max - current.k())));

        std::vector<const Proposal*> by_cluster(static_cast<std::size_t>(current.k()), nullptr);
        for (const auto& p : proposals) by_cluster[static_cast<std::size_t>(p.cluster)] = &p;

        Eigen::MatrixXd centers(current.k() + static_cast<Index>(proposals.size()), points.cols());
        Index row = 0;
        for (Index c = 0; c < current.k(); ++c) {
            if (const auto* p = by_cluster[static_cast<std::size_t>(c)]) {
                centers.row(row++) = p->children.row(0);
                centers.row(row++) = p->children.row(1);
            } else {
                centers.row(row++) = current.clusters[static_cast<std::size_t>(c)].centroid.transpose();
            }
        }
        current = lloyd(points, std::move(centers), config.max_iter);
    }
    return current;
}

Clustering enforce_min_size(Clustering clustering, Index n_min) {
    if (n_min < 1) throw ConfigError("n_min must be >= 1");
    clustering.n_min = n_min;
    auto& cs = clustering.clusters;
    while (cs.size() > 1) {
        std::size_t smallest = cs.size();
        for (std::size_t i = 0; i < cs.size(); ++i)
            if (cs[i].size() < n_min && (smallest == cs.size() || cs[i].size() < cs[smallest].size())) smallest = i;
        if (smallest == cs.size()) break;

        std::size_t target = cs.size();
        double target_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (i == smallest) continue;
            const double d = (cs[i].centroid - cs[smallest].centroid).squaredNorm();
            if (d < target_dist) {
                target_dist = d;
                target = i;
            }
        }

        auto& small = cs[smallest];
        auto& big = cs[target];
        const auto ns = static_cast<double>(small.size());
        const auto nb = static_cast<double>(big.size());
        // Inertia of the union: both parts plus the between-centroid term.
        clustering.inertia += ns * nb / (ns + nb) * target_dist;
        big.centroid = (nb * big.centroid + ns * small.centroid) / (ns + nb);
        big.members.insert(big.members.end(), small.members.begin(), small.members.end());
        std::sort(big.members.begin(), big.members.end());
        cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(smallest));
    }
    return clustering;
}

double inter_cluster_distance(const Eigen::Ref<const Eigen::MatrixXd>& centroids, InterClusterMode mode) {
    const Index k = centroids.rows();
    if (k < 2) throw DataError("inter-cluster distance needs at least two clusters");
    double sum = 0.0;
    double lowest = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j) {
            const double d = euclidean(centroids.row(i), centroids.row(j));
            sum += d;
            lowest = std::min(lowest, d);
        }
    if (mode == InterClusterMode::min) return lowest;
    return sum / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

double mean_within_cluster_distance(const Eigen::Ref<const Eigen::MatrixXd>& points, const Clustering& clustering) {
    double sum = 0.0;
    Index count = 0;
    for (const auto& c : clustering.clusters)
        for (Index m : c.members) {
            sum += euclidean(points.row(m).transpose(), c.centroid);
            ++count;
        }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

const char* to_string(InterClusterMode mode) noexcept { return mode == InterClusterMode::mean ? "mean" : "min"; }

InterClusterMode inter_cluster_mode_from_string(const std::string& text) {
    if (text == "mean") return InterClusterMode::mean;
    if (text == "min") return InterClusterMode::min;
    throw ConfigError("unknown inter-cluster distance mode '" + text + "'");
}

} // namespace pft
