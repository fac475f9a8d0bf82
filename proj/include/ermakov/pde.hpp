#pragma once

// One-dimensional measured Schrodinger equation
//
//   i hbar psi_t = -(hbar^2/2m) psi_xx + [m omega^2 x^2 / 2 + lambda x X(t)] psi
//                  - (i hbar / 4 tau) [(x - xbar)^2 / delta^2 - 1] psi
//
// on a periodic grid, with xbar and delta^2 taken self-consistently as the
// mean and variance of |psi|^2. Also: Madelung decomposition of a packet and
// residuals of the hydrodynamic (continuity / Euler) equations.

#include "ermakov/ansatz.hpp"
#include "ermakov/drive.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/params.hpp"
#include "ermakov/spectral.hpp"
#include "ermakov/stencils.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace ermakov::pde {

inline constexpr std::size_t kMinGridPoints = 64;
inline constexpr double kDefaultRhoFloor = 1e-8;
inline constexpr double kBoundaryMarginWidths = 8.0;

/// Uniform grid x_i = x_min + i dx, i = 0..n-1, dx = (x_max - x_min)/n.
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n = kMinGridPoints;
    bool periodic = true;
    double dx = 1.0 / kMinGridPoints;

    double length() const noexcept { return x_max - x_min; }
    double x(std::size_t i) const noexcept { return x_min + static_cast<double>(i) * dx; }

    std::vector<double> coordinates() const {
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = x(i);
        return xs;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

inline Grid make_grid(double x_min, double x_max, std::size_t n) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
        throw ConfigurationError("grid: need finite bounds with x_max > x_min");
    if (n < kMinGridPoints) throw ConfigurationError("grid: need n >= 64 points");
    Grid g{x_min, x_max, n, true, (x_max - x_min) / static_cast<double>(n)};
    if (!(g.dx > 0.0)) throw ConfigurationError("grid: dx underflow");
    return g;
}

struct WavePacket {
    Grid grid;
    std::vector<Complex> psi;
    double t = 0.0;
};

struct Observables {
    double t = 0.0;
    double norm = 0.0;
    double xbar = 0.0;
    double delta = 0.0;
    double excess_kurtosis = 0.0;
    double k_t = 0.0;  // hbar^2 / (4 m^2 delta^4)
};

namespace detail {

struct Moments {
    double norm;
    double mean;
    double variance;
    double fourth;  // central
};

// Periodic trapezoid moments of a non-negative weight on the grid.
inline Moments moments(std::span<const double> w, const Grid& g) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        s0 += w[i];
        s1 += w[i] * g.x(i);
    }
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw DegenerateStateError("packet has zero or non-finite norm");
    const double mean = s1 / s0;
    double s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double y = g.x(i) - mean;
        const double y2 = y * y;
        s2 += w[i] * y2;
        s4 += w[i] * y2 * y2;
    }
    return {s0 * g.dx, mean, s2 / s0, s4 / s0};
}

inline std::vector<double> density(std::span<const Complex> psi) {
    std::vector<double> rho(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
    return rho;
}

inline void require_same_grid(const Grid& g, std::size_t n, const char* what) {
    if (g.n != n) throw ShapeError(std::string(what) + ": array length does not match the grid");
}

} // namespace detail

inline Observables observables(const WavePacket& w, const PhysParams& p) {
    detail::require_same_grid(w.grid, w.psi.size(), "observables");
    const auto rho = detail::density(w.psi);
    const auto mo = detail::moments(rho, w.grid);
    if (!(mo.variance > 0.0)) throw DegenerateStateError("packet has zero variance");
    const double d2 = mo.variance;
    const double delta = std::sqrt(d2);
    return {w.t, mo.norm, mo.mean, delta, mo.fourth / (d2 * d2) - 3.0,
            p.hbar * p.hbar / (4.0 * p.m * p.m * d2 * d2)};
}

/// Normalised Gaussian with phase chosen so that the velocity field is
/// (width_rate0/delta0 + 1/(2 tau))(x - xbar0) + xbardot0.
inline WavePacket gaussian_packet(const Grid& g, double xbar0, double delta0, double xbardot0, double width_rate0,
                                  const PhysParams& p) {
    validate(p);
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw ConfigurationError("gaussian_packet: delta0 must be > 0");
    if (xbar0 - kBoundaryMarginWidths * delta0 < g.x_min || xbar0 + kBoundaryMarginWidths * delta0 > g.x_max)
        throw ConfigurationError("gaussian_packet: packet closer than 8 delta0 to the grid boundary");
    const AnsatzSlice slice{xbar0, xbardot0, delta0, width_rate0, p.tau};
    const double slope = slice.velocity_slope();
    WavePacket w{g, std::vector<Complex>(g.n), 0.0};
    for (std::size_t i = 0; i < g.n; ++i) {
        const double y = g.x(i) - xbar0;
        const double phase = p.m / p.hbar * (0.5 * slope * y * y + xbardot0 * y);
        w.psi[i] = std::polar(std::sqrt(ansatz_density(slice, g.x(i))), phase);
    }
    return w;
}

/// Right-hand side psi_t of the measured Schrodinger equation for a given
/// drive value X, with xbar/delta taken from the moments of psi.
inline std::vector<Complex> schrodinger_rhs(const WavePacket& w, const PhysParams& p, double drive_value) {
    validate(p);
    const auto& g = w.grid;
    detail::require_same_grid(g, w.psi.size(), "schrodinger_rhs");
    const SpectralDifferentiator diff(g.n, g.length());
    const auto psi_xx = diff.derivative(std::span<const Complex>(w.psi), 2);
    const auto mo = detail::moments(detail::density(w.psi), g);
    std::vector<Complex> out(g.n);
    const Complex i_unit(0.0, 1.0);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        const double y = x - mo.mean;
        const double potential = 0.5 * p.m * p.omega * p.omega * x * x + p.lambda * x * drive_value;
        const double sink = 0.25 * p.inv_tau() * (y * y / mo.variance - 1.0);
        out[j] = i_unit * (p.hbar / (2.0 * p.m)) * psi_xx[j] - i_unit * (potential / p.hbar) * w.psi[j] - sink * w.psi[j];
    }
    return out;
}

/// Largest dt the explicit-scheme heuristic m dx^2 / (pi hbar) allows.
inline double cfl_limit(const Grid& g, const PhysParams& p) { return p.m * g.dx * g.dx / (std::numbers::pi * p.hbar); }

/// Strang-split propagator (half kinetic, potential + measurement, half
/// kinetic). The measurement factor integrates the real amplitude flow
///   d ln|psi| / ds = -(1/4 tau) [(x - xbar(s))^2 / delta(s)^2 - 1]
/// across the step with xbar(s), delta(s) updated from the evolving density,
/// which keeps the norm invariant to the accuracy of that sub-integration.
class MeasurementPropagator {
public:
    MeasurementPropagator(const Grid& g, const PhysParams& p, DriveSpec d, double dt)
        : grid_(g), params_(p), drive_(std::move(d)), dt_(dt), diff_(g.n, g.length()), x_(g.coordinates()) {
        validate(params_);
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigurationError("evolve: dt must be finite and > 0");
        if (is_state_dependent(drive_) && params_.lambda == 0.0)
            throw ConfigurationError("conserving drive requires lambda != 0");
        if (is_state_dependent(drive_) && params_.measurement_off())
            throw ConfigurationError("conserving drive in the PDE requires finite tau");
        half_kinetic_.resize(g.n);
        const auto& k = diff_.k();
        for (std::size_t j = 0; j < g.n; ++j)
            half_kinetic_[j] = std::polar(1.0, -p.hbar * k[j] * k[j] * dt / (4.0 * p.m));
    }

    double dt() const noexcept { return dt_; }
    const Grid& grid() const noexcept { return grid_; }

    void step(WavePacket& w) const {
        detail::require_same_grid(grid_, w.psi.size(), "evolve");
        kinetic(w.psi);
        const double drive = drive_value(w, w.t + 0.5 * dt_);
        potential_and_measurement(w.psi, drive);
        kinetic(w.psi);
        w.t += dt_;
    }

private:
    void kinetic(std::vector<Complex>& psi) const {
        diff_.fft().forward(psi);
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_kinetic_[j];
        diff_.fft().backward(psi);
    }

    // lambda X at the mid-step; the conserving drive uses the current
    // packet's centroid and width rate (from the flux moment).
    double drive_value(const WavePacket& w, double t_mid) const {
        if (!is_state_dependent(drive_)) return explicit_drive_value(drive_, t_mid);
        const auto rho = detail::density(w.psi);
        const auto mo = detail::moments(rho, grid_);
        const auto dpsi = diff_.derivative(std::span<const Complex>(w.psi), 1);
        double flux_moment = 0.0;
        for (std::size_t i = 0; i < grid_.n; ++i)
            flux_moment += (x_[i] - mo.mean) * (p_over_m() * std::imag(std::conj(w.psi[i]) * dpsi[i]));
        flux_moment *= grid_.dx / mo.norm;
        const double log_rate = flux_moment / mo.variance - 0.5 * params_.inv_tau();
        const double bracket = log_rate * params_.inv_tau() + params_.measurement_coefficient();
        return params_.m / params_.lambda * bracket * mo.mean;
    }

    double p_over_m() const noexcept { return params_.hbar / params_.m; }

    void potential_and_measurement(std::vector<Complex>& psi, double drive) const {
        const auto rho = detail::density(psi);
        std::array<double, 3> exponent{0.0, 0.0, 0.0};
        double centre = 0.0;
        if (!params_.measurement_off()) {
            centre = detail::moments(rho, grid_).mean;
            exponent = measurement_exponent(rho, centre);
        }
        const double w2 = params_.omega * params_.omega;
        for (std::size_t i = 0; i < psi.size(); ++i) {
            const double x = x_[i];
            const double y = x - centre;
            const double potential = 0.5 * params_.m * w2 * x * x + params_.lambda * x * drive;
            const double amplitude = std::exp(exponent[0] * y * y + exponent[1] * y + exponent[2]);
            psi[i] *= std::polar(amplitude, -potential * dt_ / params_.hbar);
        }
    }

    // Coefficients (a, b, c) of G(y) = a y^2 + b y + c with y = x - centre,
    // integrated over one step with RK4. Moments are of rho0 exp(2 G).
    std::array<double, 3> measurement_exponent(const std::vector<double>& rho0, double centre) const {
        using Coeffs = std::array<double, 3>;
        const double g = params_.inv_tau();
        const std::size_t n = rho0.size();
        auto rate = [&](const Coeffs& c) -> Coeffs {
            double s0 = 0.0, s1 = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (rho0[i] == 0.0) continue;
                const double y = x_[i] - centre;
                const double w = rho0[i] * std::exp(2.0 * (c[0] * y * y + c[1] * y));
                s0 += w;
                s1 += w * y;
                s2 += w * y * y;
            }
            const double mean = s1 / s0;
            const double var = s2 / s0 - mean * mean;
            return {-0.25 * g / var, 0.5 * g * mean / var, -0.25 * g * (mean * mean / var - 1.0)};
        };
        auto add = [](const Coeffs& a, double h, const Coeffs& b) -> Coeffs {
            return {a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]};
        };
        const Coeffs c0{0.0, 0.0, 0.0};
        const Coeffs k1 = rate(c0);
        const Coeffs k2 = rate(add(c0, 0.5 * dt_, k1));
        const Coeffs k3 = rate(add(c0, 0.5 * dt_, k2));
        const Coeffs k4 = rate(add(c0, dt_, k3));
        Coeffs out;
        for (std::size_t j = 0; j < 3; ++j) out[j] = dt_ / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        return out;
    }

    Grid grid_;
    PhysParams params_;
    DriveSpec drive_;
    double dt_;
    SpectralDifferentiator diff_;
    std::vector<double> x_;
    std::vector<Complex> half_kinetic_;
};

struct EvolveResult {
    WavePacket packet;
    std::vector<Observables> history;  // initial state plus one entry per step
    bool cfl_exceeded = false;
};

struct EvolveProgress {
    WavePacket packet;
    std::vector<Observables> history;
};

using AbortedEvolution = AbortedError<EvolveProgress>;

/// Advances `w` by `steps` steps of size dt. Norm is not renormalised; a norm
/// leaving [0.5, 2] raises DivergenceError, non-finite amplitudes raise
/// AbortedEvolution (both carry the last valid state through AbortedEvolution
/// or the history so far).
inline EvolveResult evolve(WavePacket w, const PhysParams& p, const DriveSpec& d, double dt, std::size_t steps) {
    const MeasurementPropagator prop(w.grid, p, d, dt);
    EvolveResult out;
    out.cfl_exceeded = dt > cfl_limit(w.grid, p);
    out.history.reserve(steps + 1);
    out.history.push_back(observables(w, p));
    for (std::size_t s = 0; s < steps; ++s) {
        WavePacket next = w;
        prop.step(next);
        const bool finite = std::all_of(next.psi.begin(), next.psi.end(),
                                        [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
        if (!finite) throw AbortedEvolution("evolve: non-finite amplitude", {std::move(w), std::move(out.history)});
        Observables obs;
        try {
            obs = observables(next, p);
        } catch (const DegenerateStateError& e) {
            throw AbortedEvolution(std::string("evolve: ") + e.what(), {std::move(w), std::move(out.history)});
        }
        if (!(obs.norm >= 0.5 && obs.norm <= 2.0))
            throw DivergenceError("evolve: norm left [0.5, 2] at t = " + std::to_string(next.t));
        out.history.push_back(obs);
        w = std::move(next);
    }
    out.packet = std::move(w);
    return out;
}

/// Hydrodynamic fields of a packet. `v_qu` is finite everywhere but only
/// meaningful where `valid_mask` is set; `V_qu` is NaN outside the mask.
struct MadelungFields {
    Grid grid;
    std::vector<double> rho;
    std::vector<double> S;
    std::vector<double> v_qu;
    std::vector<double> V_qu;
    std::vector<std::uint8_t> valid_mask;

    std::size_t valid_count() const {
        return static_cast<std::size_t>(std::count(valid_mask.begin(), valid_mask.end(), std::uint8_t{1}));
    }
};

/// Wraps an angle difference into (-pi, pi].
inline double wrap_phase(double d) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    d = std::remainder(d, two_pi);
    if (d <= -std::numbers::pi) d += two_pi;
    return d;
}

/// Unwraps arg(psi) outward from index `origin`, where S keeps its principal value.
inline std::vector<double> unwrap_from(std::span<const Complex> psi, std::size_t origin) {
    const std::size_t n = psi.size();
    std::vector<double> s(n);
    s[origin] = std::arg(psi[origin]);
    for (std::size_t i = origin + 1; i < n; ++i) s[i] = s[i - 1] + wrap_phase(std::arg(psi[i]) - std::arg(psi[i - 1]));
    for (std::size_t i = origin; i-- > 0;) s[i] = s[i + 1] + wrap_phase(std::arg(psi[i]) - std::arg(psi[i + 1]));
    return s;
}

inline MadelungFields madelung_decompose(const WavePacket& w, const PhysParams& p, double rho_floor = kDefaultRhoFloor) {
    validate(p);
    const auto& g = w.grid;
    detail::require_same_grid(g, w.psi.size(), "madelung_decompose");
    MadelungFields f;
    f.grid = g;
    f.rho = detail::density(w.psi);
    const auto mo = detail::moments(f.rho, g);

    const double pos = std::round((mo.mean - g.x_min) / g.dx);
    const auto origin = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(g.n - 1)));
    f.S = unwrap_from(w.psi, origin);

    f.v_qu = stencil::differentiate(stencil::d1_o4, f.S, g.dx);
    for (auto& v : f.v_qu) v *= p.hbar / p.m;

    const double rho_max = *std::max_element(f.rho.begin(), f.rho.end());
    f.valid_mask.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) f.valid_mask[i] = f.rho[i] >= rho_floor * rho_max ? 1 : 0;

    std::vector<double> amp(g.n);
    for (std::size_t i = 0; i < g.n; ++i) amp[i] = std::sqrt(f.rho[i]);
    const SpectralDifferentiator diff(g.n, g.length());
    const auto amp_xx = diff.derivative(std::span<const double>(amp), 2);
    f.V_qu.assign(g.n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < g.n; ++i)
        if (f.valid_mask[i]) f.V_qu[i] = -(p.hbar * p.hbar / (2.0 * p.m)) * amp_xx[i] / amp[i];
    return f;
}

/// Analytic fields of a Gaussian slice on a grid. With `measurement_shift`
/// false the velocity omits the (x - xbar)/(2 tau) term.
inline MadelungFields ansatz_fields(const Grid& g, const AnsatzSlice& s, const PhysParams& p,
                                    bool measurement_shift = true) {
    validate(s);
    MadelungFields f;
    f.grid = g;
    f.rho.resize(g.n);
    f.S.resize(g.n);
    f.v_qu.resize(g.n);
    f.V_qu.resize(g.n);
    f.valid_mask.assign(g.n, 1);
    const double slope = measurement_shift ? s.velocity_slope() : s.log_rate();
    double rho_max = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double x = g.x(i);
        const double y = x - s.xbar;
        f.rho[i] = ansatz_density(s, x);
        f.v_qu[i] = slope * y + s.xbardot;
        f.S[i] = p.m / p.hbar * (0.5 * slope * y * y + s.xbardot * y);
        f.V_qu[i] = ansatz_bohm_potential(s, x, p.hbar, p.m);
        rho_max = std::max(rho_max, f.rho[i]);
    }
    for (std::size_t i = 0; i < g.n; ++i) f.valid_mask[i] = f.rho[i] >= kDefaultRhoFloor * rho_max ? 1 : 0;
    return f;
}

struct ForceFit {
    double k_est = 0.0;
    double max_rel_dev = 0.0;  // max |F - k y| / max |k y| over the window
    std::size_t samples = 0;
};

/// Least-squares fit of the quantum force F = -(1/m) dV_qu/dx to k (x - xbar)
/// over masked points with |x - xbar| <= window_widths * delta.
inline ForceFit quantum_force_linearity(const MadelungFields& f, const PhysParams& p, double window_widths = 4.0) {
    const auto& g = f.grid;
    for (std::size_t len : {f.rho.size(), f.V_qu.size(), f.valid_mask.size()})
        detail::require_same_grid(g, len, "quantum_force_linearity");
    const auto mo = detail::moments(f.rho, g);
    const double delta = std::sqrt(mo.variance);
    constexpr std::size_t R = stencil::d1_o4.radius;

    std::vector<double> ys, forces;
    for (std::size_t i = R; i + R < g.n; ++i) {
        const double y = g.x(i) - mo.mean;
        if (std::abs(y) > window_widths * delta) continue;
        bool full = true;
        for (std::size_t j = i - R; j <= i + R; ++j) full = full && f.valid_mask[j];
        if (!full) continue;
        ys.push_back(y);
        forces.push_back(-stencil::apply(stencil::d1_o4, std::span<const double>(f.V_qu), i, g.dx) / p.m);
    }
    if (ys.size() < 16) throw InsufficientSupportError("quantum_force_linearity: fewer than 16 valid points in window");

    double syy = 0.0, syf = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        syy += ys[i] * ys[i];
        syf += ys[i] * forces[i];
    }
    ForceFit fit;
    fit.k_est = syf / syy;
    fit.samples = ys.size();
    double dev = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        dev = std::max(dev, std::abs(forces[i] - fit.k_est * ys[i]));
        scale = std::max(scale, std::abs(fit.k_est * ys[i]));
    }
    fit.max_rel_dev = scale > 0.0 ? dev / scale : std::numeric_limits<double>::infinity();
    return fit;
}

struct Residual {
    std::vector<double> values;  // NaN where not evaluated
    double max_abs = 0.0;        // over evaluated points
    std::size_t samples = 0;
};

/// r = d rho/dt + d(rho v)/dx + (rho / 2 tau)[(x - xbar)^2/delta^2 - 1] on the mask.
inline Residual continuity_residual(const MadelungFields& f, std::span<const double> drho_dt, const PhysParams& p,
                                    double xbar, double delta) {
    const auto& g = f.grid;
    for (std::size_t len : {f.rho.size(), f.v_qu.size(), f.valid_mask.size(), drho_dt.size()})
        detail::require_same_grid(g, len, "continuity_residual");
    if (!(delta > 0.0)) throw DomainError("continuity_residual: delta must be > 0");
    std::vector<double> flux(g.n);
    for (std::size_t i = 0; i < g.n; ++i) flux[i] = f.rho[i] * f.v_qu[i];
    const SpectralDifferentiator diff(g.n, g.length());
    const auto dflux = diff.derivative(std::span<const double>(flux), 1);

    Residual r;
    r.values.assign(g.n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < g.n; ++i) {
        if (!f.valid_mask[i]) continue;
        const double z = (g.x(i) - xbar) / delta;
        r.values[i] = drho_dt[i] + dflux[i] + 0.5 * p.inv_tau() * f.rho[i] * (z * z - 1.0);
        r.max_abs = std::max(r.max_abs, std::abs(r.values[i]));
        ++r.samples;
    }
    return r;
}

/// r = dv/dt + v dv/dx + omega^2 x + (lambda/m) X - k (x - xbar), with k and
/// xbar taken from `obs`.
inline Residual euler_residual(const MadelungFields& f, std::span<const double> dv_dt, const PhysParams& p,
                               double drive_value, const Observables& obs) {
    const auto& g = f.grid;
    for (std::size_t len : {f.v_qu.size(), f.valid_mask.size(), dv_dt.size()})
        detail::require_same_grid(g, len, "euler_residual");
    constexpr std::size_t R = stencil::d1_o4.radius;
    Residual r;
    r.values.assign(g.n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = R; i + R < g.n; ++i) {
        if (!f.valid_mask[i]) continue;
        const double x = g.x(i);
        const double dvdx = stencil::apply(stencil::d1_o4, std::span<const double>(f.v_qu), i, g.dx);
        r.values[i] = dv_dt[i] + f.v_qu[i] * dvdx + p.omega * p.omega * x + p.lambda / p.m * drive_value -
                      obs.k_t * (x - obs.xbar);
        r.max_abs = std::max(r.max_abs, std::abs(r.values[i]));
        ++r.samples;
    }
    return r;
}

/// Overload for explicit drives, sampled at obs.t.
inline Residual euler_residual(const MadelungFields& f, std::span<const double> dv_dt, const PhysParams& p,
                               const DriveSpec& d, const Observables& obs) {
    return euler_residual(f, dv_dt, p, explicit_drive_value(d, obs.t), obs);
}

} // namespace ermakov::pde
