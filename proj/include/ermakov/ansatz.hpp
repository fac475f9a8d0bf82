#pragma once

// Closed-form Gaussian packet fields shared by the PDE residual checks and
// the identity suite.

#include "ermakov/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ermakov {

/// Instantaneous parameters of a Gaussian packet: centroid, width and their
/// time derivatives, plus the measurement time constant (may be infinite).
struct AnsatzSlice {
    double xbar = 0.0;
    double xbardot = 0.0;
    double delta = 1.0;
    double deltadot = 0.0;
    double tau = std::numeric_limits<double>::infinity();

    double inv_tau() const noexcept { return std::isinf(tau) ? 0.0 : 1.0 / tau; }
    double log_rate() const noexcept { return deltadot / delta; }
    /// Slope of the corrected velocity field, deltadot/delta + 1/(2 tau).
    double velocity_slope() const noexcept { return log_rate() + 0.5 * inv_tau(); }
};

inline void validate(const AnsatzSlice& s) {
    if (!(s.delta > 0.0) || !std::isfinite(s.delta)) throw DomainError("ansatz: delta must be finite and > 0");
    if (!(s.tau > 0.0)) throw DomainError("ansatz: tau must be > 0");
}

/// rho = (2 pi delta^2)^{-1/2} exp(-(x - xbar)^2 / (2 delta^2)).
inline double ansatz_density(const AnsatzSlice& s, double x) {
    const double z = (x - s.xbar) / s.delta;
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * s.delta * s.delta);
}

/// d rho / dt by the chain rule at fixed x.
inline double ansatz_density_rate(const AnsatzSlice& s, double x) {
    const double y = x - s.xbar;
    const double d2 = s.delta * s.delta;
    return ansatz_density(s, x) * (-s.log_rate() + y * s.xbardot / d2 + y * y * s.deltadot / (d2 * s.delta));
}

/// Velocity field without the measurement correction: (deltadot/delta)(x - xbar) + xbardot.
inline double velocity_uncorrected(const AnsatzSlice& s, double x) { return s.log_rate() * (x - s.xbar) + s.xbardot; }

/// Velocity field compatible with the measured continuity equation.
inline double velocity_ansatz(const AnsatzSlice& s, double x) { return s.velocity_slope() * (x - s.xbar) + s.xbardot; }

/// d v / dt of `velocity_ansatz` at fixed x given the second derivatives.
inline double velocity_ansatz_rate(const AnsatzSlice& s, double delta_ddot, double xbar_ddot, double x) {
    const double lr = s.log_rate();
    return (delta_ddot / s.delta - lr * lr) * (x - s.xbar) - s.velocity_slope() * s.xbardot + xbar_ddot;
}

/// Bohm potential of the Gaussian: -(hbar^2/2m)[(x - xbar)^2/(4 delta^4) - 1/(2 delta^2)].
inline double ansatz_bohm_potential(const AnsatzSlice& s, double x, double hbar, double m) {
    const double y = x - s.xbar;
    const double d2 = s.delta * s.delta;
    return -(hbar * hbar / (2.0 * m)) * (y * y / (4.0 * d2 * d2) - 0.5 / d2);
}

} // namespace ermakov
