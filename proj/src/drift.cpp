#include "pft/drift.hpp"

#include "pft/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pft {

const char* to_string(DeviationMode mode) noexcept {
    return mode == DeviationMode::signed_mean ? "signed" : "absolute";
}

DeviationMode deviation_mode_from_string(const std::string& text) {
    if (text == "signed") return DeviationMode::signed_mean;
    if (text == "absolute") return DeviationMode::absolute;
    throw ConfigError("unknown drift deviation mode '" + text + "'");
}

double hoeffding_epsilon(double range, double gamma, Index omega) {
    if (!(range >= 0.0) || !std::isfinite(range)) throw ConfigError("Hoeffding range must be finite and >= 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("Hoeffding gamma must lie in (0, 1)");
    if (omega < 1) throw ConfigError("Hoeffding window must be >= 1");
    return std::sqrt(range * range * std::log(1.0 / gamma) / (2.0 * static_cast<double>(omega)));
}

DriftDetector::DriftDetector(double d_ref, Index omega, double gamma, DeviationMode mode)
    : d_ref_(d_ref), omega_(omega), gamma_(gamma), mode_(mode) {
    if (!(d_ref >= 0.0) || !std::isfinite(d_ref)) throw ConfigError("d_ref must be finite and >= 0");
    if (omega < 1) throw ConfigError("drift.omega must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("drift.gamma must lie in (0, 1)");
    window_.reserve(static_cast<std::size_t>(omega));
}

DriftVerdict DriftDetector::observe(double distance) {
    if (!(distance >= 0.0) || !std::isfinite(distance))
        throw std::invalid_argument("observed distance must be finite and >= 0");
    const double delta = mode_ == DeviationMode::signed_mean ? distance - d_ref_ : std::abs(distance - d_ref_);
    if (window_full()) {
        window_[head_] = delta;
        head_ = (head_ + 1) % window_.size();
    } else {
        window_.push_back(delta);
    }
    ++steps_;

    DriftVerdict v;
    v.window_full = window_full();
    if (!v.window_full) return v;

    const auto [lo, hi] = std::minmax_element(window_.begin(), window_.end());
    v.range = *hi - *lo;
    v.epsilon = hoeffding_epsilon(v.range, gamma_, omega_);
    v.mean_delta = std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(omega_);
    if (!latched_ && v.mean_delta > v.epsilon) {
        v.drifted = true;
        latched_ = true;
    }
    return v;
}

void DriftDetector::reset(double new_d_ref) {
    if (!(new_d_ref >= 0.0) || !std::isfinite(new_d_ref)) throw ConfigError("d_ref must be finite and >= 0");
    d_ref_ = new_d_ref;
    window_.clear();
    head_ = 0;
    steps_ = 0;
    latched_ = false;
}

std::vector<double> DriftDetector::window() const {
    std::vector<double> out;
    out.reserve(window_.size());
    for (std::size_t i = 0; i < window_.size(); ++i) out.push_back(window_[(head_ + i) % window_.size()]);
    return out;
}

} // namespace pft
