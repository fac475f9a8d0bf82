#pragma once

// Reduced dynamics: the classical time-dependent oscillator with its
// auxiliary (Pinney) amplitude, and the width/centroid equations of a
// Gaussian packet under continuous measurement. Both are integrated with
// fixed-step classical RK4.

#include "ermakov/drive.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/params.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ermakov {

inline constexpr double kDefaultAlphaMin = 1e-8;

/// omega^2(t) = omega0^2 (1 + epsilon sin(modulation t)); epsilon = 0 is a
/// constant frequency.
class OmegaSpec {
public:
    static OmegaSpec constant(double omega0) { return OmegaSpec(omega0, 0.0, 0.0); }

    static OmegaSpec sinusoidal(double omega0, double epsilon, double modulation) {
        return OmegaSpec(omega0, epsilon, modulation);
    }

    double omega_squared(double t) const noexcept {
        return omega0_ * omega0_ * (1.0 + epsilon_ * std::sin(modulation_ * t));
    }

    double omega0() const noexcept { return omega0_; }
    double epsilon() const noexcept { return epsilon_; }
    double modulation() const noexcept { return modulation_; }
    bool is_constant() const noexcept { return epsilon_ == 0.0; }

private:
    OmegaSpec(double omega0, double epsilon, double modulation)
        : omega0_(omega0), epsilon_(epsilon), modulation_(modulation) {
        if (!(omega0 >= 0.0) || !std::isfinite(omega0)) throw ConfigurationError("omega0 must be finite and >= 0");
        if (!(std::abs(epsilon) < 1.0)) throw ConfigurationError("|epsilon| must be < 1 so that omega^2(t) > 0");
        if (!std::isfinite(modulation)) throw ConfigurationError("modulation frequency must be finite");
    }

    double omega0_;
    double epsilon_;
    double modulation_;
};

struct ClassicalState {
    double t = 0.0;
    double q = 0.0;
    double qdot = 0.0;
    double alpha = 1.0;
    double alphadot = 0.0;
};

/// Reduced state of the measured packet: dimensionless width alpha and
/// centroid xbar, with their rates.
struct ErmakovState {
    double t = 0.0;
    double alpha = 1.0;
    double alphadot = 0.0;
    double xbar = 0.0;
    double xbardot = 0.0;
};

struct ClassicalAccel {
    double q_ddot;
    double alpha_ddot;
};

struct MeasurementAccel {
    double alpha_ddot;
    double xbar_ddot;
};

namespace detail {

inline bool all_finite(std::initializer_list<double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_positive_alpha(double alpha, const char* where) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError(std::string(where) + ": alpha must be finite and > 0");
}

// alphadot/(alpha tau) + C_tau, the bracket shared by the invariant rate and
// the conserving drive.
inline double rate_bracket(const ErmakovState& s, const PhysParams& p) {
    return s.alphadot / s.alpha * p.inv_tau() + p.measurement_coefficient();
}

} // namespace detail

inline ClassicalAccel classical_rhs(const ClassicalState& s, const OmegaSpec& w) {
    if (!detail::all_finite({s.t, s.q, s.qdot, s.alpha, s.alphadot}))
        throw InvalidStateError("classical_rhs: non-finite state");
    if (!(s.alpha > 0.0)) throw InvalidStateError("classical_rhs: alpha must be > 0");
    const double w2 = w.omega_squared(s.t);
    return {-w2 * s.q, 1.0 / (s.alpha * s.alpha * s.alpha) - w2 * s.alpha};
}

/// I = 1/2 [(qdot alpha - alphadot q)^2 + (q/alpha)^2].
inline double lewis_invariant(double q, double qdot, double alpha, double alphadot) {
    detail::require_positive_alpha(alpha, "lewis_invariant");
    const double w = qdot * alpha - alphadot * q;
    const double r = q / alpha;
    return 0.5 * (w * w + r * r);
}

inline double lewis_invariant(const ClassicalState& s) { return lewis_invariant(s.q, s.qdot, s.alpha, s.alphadot); }

/// X that makes dI/dt vanish: (m/lambda)[alphadot/(alpha tau) + C_tau] xbar.
inline double conserving_drive(const ErmakovState& s, const PhysParams& p) {
    if (p.lambda == 0.0) throw ConfigurationError("conserving drive requires lambda != 0");
    detail::require_positive_alpha(s.alpha, "conserving_drive");
    return p.m / p.lambda * detail::rate_bracket(s, p) * s.xbar;
}

/// Value of X applied at state `s` (time s.t).
inline double applied_drive(const DriveSpec& d, const ErmakovState& s, const PhysParams& p) {
    if (is_state_dependent(d)) return conserving_drive(s, p);
    return explicit_drive_value(d, s.t);
}

/// (lambda/m) X. For the conserving drive this is formed directly as
/// bracket * xbar so the cancellation in `els_invariant_rate` is exact.
inline double drive_acceleration(const DriveSpec& d, const ErmakovState& s, const PhysParams& p) {
    if (is_state_dependent(d)) {
        if (p.lambda == 0.0) throw ConfigurationError("conserving drive requires lambda != 0");
        return detail::rate_bracket(s, p) * s.xbar;
    }
    return p.lambda / p.m * explicit_drive_value(d, s.t);
}

/// Accelerations of the reduced measurement model:
///   alpha'' = 1/alpha^3 - alpha'/tau - (omega^2 + C_tau) alpha
///   xbar''  = -omega^2 xbar - (lambda/m) X(t)
inline MeasurementAccel measurement_rhs(const ErmakovState& s, const PhysParams& p, const DriveSpec& d,
                                        double alpha_min = kDefaultAlphaMin) {
    if (!detail::all_finite({s.t, s.alpha, s.alphadot, s.xbar, s.xbardot}))
        throw InvalidStateError("measurement_rhs: non-finite state");
    if (!(s.alpha >= alpha_min)) throw WidthCollapseError("measurement_rhs: alpha fell below alpha_min");
    const double w2 = p.omega * p.omega;
    const double a3 = s.alpha * s.alpha * s.alpha;
    const double alpha_ddot = 1.0 / a3 - s.alphadot * p.inv_tau() - (w2 + p.measurement_coefficient()) * s.alpha;
    const double xbar_ddot = -w2 * s.xbar - drive_acceleration(d, s, p);
    return {alpha_ddot, xbar_ddot};
}

/// I = 1/2 [(alphadot xbar - xbardot alpha)^2 + (xbar/alpha)^2].
inline double els_invariant(const ErmakovState& s) {
    detail::require_positive_alpha(s.alpha, "els_invariant");
    const double w = s.alphadot * s.xbar - s.xbardot * s.alpha;
    const double r = s.xbar / s.alpha;
    return 0.5 * (w * w + r * r);
}

/// dI/dt along the measurement flow, written with the xbar division of the
/// drive term cancelled:
///   alpha^3 d/dt(xbar/alpha) [ (alphadot/(alpha tau) + C_tau) xbar - (lambda/m) X ].
inline double els_invariant_rate(const ErmakovState& s, const PhysParams& p, const DriveSpec& d) {
    detail::require_positive_alpha(s.alpha, "els_invariant_rate");
    const double a2 = s.alpha * s.alpha;
    const double ratio_rate = (s.xbardot * s.alpha - s.xbar * s.alphadot) / a2;
    const double forcing = detail::rate_bracket(s, p) * s.xbar - drive_acceleration(d, s, p);
    return a2 * s.alpha * ratio_rate * forcing;
}

struct ClassicalRecord {
    ClassicalState state;
    double invariant;
};

struct MeasurementRecord {
    ErmakovState state;
    double delta;
    double invariant;
    double rate;   // analytic dI/dt
    double drive;  // X applied at this record
};

struct ClassicalTrajectory {
    OmegaSpec omega;
    double dt;
    std::vector<ClassicalRecord> records;
};

struct MeasurementTrajectory {
    PhysParams params;
    DriveSpec drive;
    double dt;
    std::vector<MeasurementRecord> records;
};

using AbortedClassicalTrajectory = AbortedError<ClassicalTrajectory>;
using AbortedMeasurementTrajectory = AbortedError<MeasurementTrajectory>;

namespace detail {

using Vec4 = std::array<double, 4>;

inline Vec4 axpy(const Vec4& y, double h, const Vec4& k) {
    return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
}

// One classical RK4 step of y' = f(t, y).
template <class F>
Vec4 rk4_step(F&& f, double t, const Vec4& y, double dt) {
    const Vec4 k1 = f(t, y);
    const Vec4 k2 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
    const Vec4 k3 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
    const Vec4 k4 = f(t + dt, axpy(y, dt, k3));
    Vec4 out;
    for (std::size_t i = 0; i < 4; ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

inline std::size_t step_count(double t0, double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigurationError("integrate: dt must be finite and > 0");
    if (!(t_end > t0)) throw ConfigurationError("integrate: t_end must exceed the initial time");
    const double n = std::round((t_end - t0) / dt);
    if (n < 1.0) throw ConfigurationError("integrate: t_end - t0 shorter than one step");
    return static_cast<std::size_t>(n);
}

} // namespace detail

/// RK4 trajectory of the classical oscillator plus auxiliary amplitude.
/// Records are at t0 + i dt, i = 0..round((t_end - t0)/dt).
inline ClassicalTrajectory integrate_classical(const ClassicalState& init, const OmegaSpec& w, double t_end,
                                               double dt) {
    const std::size_t steps = detail::step_count(init.t, t_end, dt);
    ClassicalTrajectory traj{w, dt, {}};
    traj.records.reserve(steps + 1);
    traj.records.push_back({init, lewis_invariant(init)});

    auto f = [&](double t, const detail::Vec4& y) -> detail::Vec4 {
        const auto acc = classical_rhs({t, y[0], y[1], y[2], y[3]}, w);
        return {y[1], acc.q_ddot, y[3], acc.alpha_ddot};
    };

    detail::Vec4 y{init.q, init.qdot, init.alpha, init.alphadot};
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t_prev = init.t + static_cast<double>(i - 1) * dt;
        try {
            y = detail::rk4_step(f, t_prev, y, dt);
            const ClassicalState s{init.t + static_cast<double>(i) * dt, y[0], y[1], y[2], y[3]};
            if (!detail::all_finite({s.q, s.qdot, s.alpha, s.alphadot}) || !(s.alpha > 0.0))
                throw InvalidStateError("non-finite or non-positive amplitude");
            traj.records.push_back({s, lewis_invariant(s)});
        } catch (const Error& e) {
            throw AbortedClassicalTrajectory(std::string("classical trajectory aborted: ") + e.what(), traj);
        }
    }
    return traj;
}

inline MeasurementRecord make_record(const ErmakovState& s, const PhysParams& p, const DriveSpec& d) {
    return {s, delta_from_alpha(s.alpha, p), els_invariant(s), els_invariant_rate(s, p, d), applied_drive(d, s, p)};
}

/// RK4 trajectory of the reduced measurement model. The drive is sampled at
/// the stage times; the conserving drive at the stage states.
inline MeasurementTrajectory integrate_measurement(const ErmakovState& init, const PhysParams& p,
                                                   const DriveSpec& d, double t_end, double dt,
                                                   double alpha_min = kDefaultAlphaMin) {
    validate(p);
    if (is_state_dependent(d) && p.lambda == 0.0) throw ConfigurationError("conserving drive requires lambda != 0");
    const std::size_t steps = detail::step_count(init.t, t_end, dt);
    if (!(init.alpha >= alpha_min)) throw WidthCollapseError("initial alpha below alpha_min");

    MeasurementTrajectory traj{p, d, dt, {}};
    traj.records.reserve(steps + 1);
    traj.records.push_back(make_record(init, p, d));

    auto f = [&](double t, const detail::Vec4& y) -> detail::Vec4 {
        const auto acc = measurement_rhs({t, y[0], y[1], y[2], y[3]}, p, d, alpha_min);
        return {y[1], acc.alpha_ddot, y[3], acc.xbar_ddot};
    };

    detail::Vec4 y{init.alpha, init.alphadot, init.xbar, init.xbardot};
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t_prev = init.t + static_cast<double>(i - 1) * dt;
        try {
            y = detail::rk4_step(f, t_prev, y, dt);
            const ErmakovState s{init.t + static_cast<double>(i) * dt, y[0], y[1], y[2], y[3]};
            if (!detail::all_finite({s.alpha, s.alphadot, s.xbar, s.xbardot}))
                throw InvalidStateError("non-finite state");
            if (!(s.alpha >= alpha_min)) throw WidthCollapseError("alpha fell below alpha_min");
            traj.records.push_back(make_record(s, p, d));
        } catch (const Error& e) {
            throw AbortedMeasurementTrajectory(std::string("measurement trajectory aborted: ") + e.what(), traj);
        }
    }
    return traj;
}

/// Finite-difference dI/dt of a uniformly sampled series: centered in the
/// interior, second-order one-sided at the two ends.
inline std::vector<double> finite_difference_rate(std::span<const double> values, double dt) {
    const std::size_t n = values.size();
    std::vector<double> out(n, 0.0);
    if (n < 3) return out;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    return out;
}

inline std::vector<double> invariant_series(const MeasurementTrajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.records.size());
    for (const auto& r : traj.records) out.push_back(r.invariant);
    return out;
}

inline std::vector<double> numeric_invariant_rate(const MeasurementTrajectory& traj) {
    const auto series = invariant_series(traj);
    return finite_difference_rate(series, traj.dt);
}

} // namespace ermakov
