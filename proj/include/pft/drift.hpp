#pragma once

#include "pft/series.hpp"

#include <string>
#include <vector>

namespace pft {

/// How a nearest-centroid distance d_t becomes the monitored deviation.
///   signed_mean: delta = d_t - d_ref; drift when the window mean exceeds xi.
///   absolute:    delta = |d_t - d_ref|; drift when the window mean exceeds xi.
/// The absolute form fires on any stationary noise once the window is full
/// (its mean is about R/2, well above xi), so it is kept for comparison only.
enum class DeviationMode { signed_mean, absolute };

const char* to_string(DeviationMode mode) noexcept;
DeviationMode deviation_mode_from_string(const std::string& text);

/// Hoeffding bound sqrt(R^2 ln(1/gamma) / (2 omega)).
double hoeffding_epsilon(double range, double gamma, Index omega);

struct DriftVerdict {
    bool drifted = false;
    double mean_delta = 0.0;
    double epsilon = 0.0;
    double range = 0.0;
    bool window_full = false;
};

/// Sliding-window Hoeffding monitor over nearest-centroid distances.
/// After a drift verdict the detector stays silent until reset().
class DriftDetector {
public:
    DriftDetector(double d_ref, Index omega, double gamma, DeviationMode mode = DeviationMode::signed_mean);

    DriftVerdict observe(double distance);
    void reset(double new_d_ref);

    [[nodiscard]] double d_ref() const noexcept { return d_ref_; }
    [[nodiscard]] Index omega() const noexcept { return omega_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] DeviationMode mode() const noexcept { return mode_; }
    [[nodiscard]] bool window_full() const noexcept { return static_cast<Index>(window_.size()) == omega_; }
    [[nodiscard]] Index window_size() const noexcept { return static_cast<Index>(window_.size()); }
    [[nodiscard]] Index steps_since_reset() const noexcept { return steps_; }
    /// Deviations currently held, oldest first.
    [[nodiscard]] std::vector<double> window() const;

private:
    double d_ref_;
    Index omega_;
    double gamma_;
    DeviationMode mode_;
    std::vector<double> window_;  // ring storage, capacity omega
    std::size_t head_ = 0;        // index of the oldest entry once full
    Index steps_ = 0;
    bool latched_ = false;
};

inline DriftDetector init_detector(double d_ref, Index omega, double gamma,
                                   DeviationMode mode = DeviationMode::signed_mean) {
    return DriftDetector(d_ref, omega, gamma, mode);
}

} // namespace pft
