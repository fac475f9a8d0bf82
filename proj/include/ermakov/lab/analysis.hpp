#pragma once

// Summary metrics shared by the runner's reports.

#include "ermakov/ode.hpp"
#include "ermakov/pde.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace ermakov::lab {

/// (max - min) / |first|, or the absolute range when the first value is 0.
inline double relative_range(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double scale = std::abs(v.front());
    return scale > 0.0 ? (*hi - *lo) / scale : (*hi - *lo);
}

/// Largest |centered FD of I - analytic dI/dt| over interior samples,
/// relative to max |analytic dI/dt| along the trajectory.
inline double rate_mismatch(const MeasurementTrajectory& traj) {
    const auto numeric = numeric_invariant_rate(traj);
    double scale = 0.0, worst = 0.0;
    for (const auto& r : traj.records) scale = std::max(scale, std::abs(r.rate));
    for (std::size_t i = 1; i + 1 < traj.records.size(); ++i)
        worst = std::max(worst, std::abs(numeric[i] - traj.records[i].rate));
    return scale > 0.0 ? worst / scale : worst;
}

struct ClosureDeviation {
    double xbar = 0.0;   // max |xbar_pde - xbar_ode| / max |xbar_ode|
    double delta = 0.0;  // max |delta_pde - delta_ode| / delta_ode
};

inline ClosureDeviation closure_deviation(const std::vector<pde::Observables>& history,
                                          const MeasurementTrajectory& traj) {
    const std::size_t n = std::min(history.size(), traj.records.size());
    double amp = 0.0, dx = 0.0, dd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = traj.records[i];
        amp = std::max(amp, std::abs(r.state.xbar));
        dx = std::max(dx, std::abs(history[i].xbar - r.state.xbar));
        dd = std::max(dd, std::abs(history[i].delta - r.delta) / r.delta);
    }
    return {amp > 0.0 ? dx / amp : dx, dd};
}

inline double max_norm_drift(const std::vector<pde::Observables>& history) {
    double worst = 0.0;
    for (const auto& o : history) worst = std::max(worst, std::abs(o.norm - 1.0));
    return worst;
}

inline double max_abs_kurtosis(const std::vector<pde::Observables>& history) {
    double worst = 0.0;
    for (const auto& o : history) worst = std::max(worst, std::abs(o.excess_kurtosis));
    return worst;
}

} // namespace ermakov::lab
