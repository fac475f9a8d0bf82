#include <catch2/catch_amalgamated.hpp>

#include "ermakov/ode.hpp"
#include "ermakov/pde.hpp"

#include <cmath>

using namespace ermakov;
using namespace ermakov::pde;
using Catch::Approx;

namespace {

PhysParams measured(double omega, double lambda, double tau) {
    PhysParams p;
    p.omega = omega;
    p.lambda = lambda;
    p.tau = tau;
    return p;
}

double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Least-squares slope of v against (x - xbar) over |x - xbar| <= window on the mask.
double velocity_slope_fit(const MadelungFields& f, double xbar, double window) {
    double syy = 0.0, syv = 0.0, sy = 0.0, sv = 0.0, count = 0.0;
    for (std::size_t i = 0; i < f.grid.n; ++i) {
        const double y = f.grid.x(i) - xbar;
        if (!f.valid_mask[i] || std::abs(y) > window) continue;
        syy += y * y;
        syv += y * f.v_qu[i];
        sy += y;
        sv += f.v_qu[i];
        count += 1.0;
    }
    return (syv - sy * sv / count) / (syy - sy * sy / count);
}

AnsatzSlice slice_from(const ErmakovState& s, const PhysParams& p) {
    const double scale = p.width_scale();
    return {s.xbar, s.xbardot, scale * s.alpha, scale * s.alphadot, p.tau};
}

} // namespace

TEST_CASE("make_grid spacing and validation", "[pde][grid]") {
    CHECK(make_grid(-16.0, 16.0, 1024).dx == 0.03125);
    CHECK(make_grid(0.0, 1.0, 64).dx == 0.015625);
    CHECK(make_grid(0.0, 1.0, 64).periodic);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 32), ConfigurationError);
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 64), ConfigurationError);
    CHECK_THROWS_AS(make_grid(0.0, INFINITY, 64), ConfigurationError);
}

TEST_CASE("gaussian_packet normalisation, peak and variance", "[pde][packet]") {
    const PhysParams p;
    const auto g = make_grid(-16.0, 16.0, 1024);
    for (double delta0 : {0.5, 1.0, 1.5}) {
        const auto w = gaussian_packet(g, 0.0, delta0, 0.3, -0.1, p);
        const auto obs = observables(w, p);
        CHECK(std::abs(obs.norm - 1.0) <= 1e-10);
        CHECK(obs.delta * obs.delta == Approx(delta0 * delta0).margin(1e-8));
        const auto centre = static_cast<std::size_t>(std::lround((0.0 - g.x_min) / g.dx));
        CHECK(std::norm(w.psi[centre]) == Approx(1.0 / std::sqrt(2.0 * std::numbers::pi * delta0 * delta0)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(gaussian_packet(g, 10.0, 1.0, 0.0, 0.0, p), ConfigurationError);
    CHECK_THROWS_AS(gaussian_packet(g, 0.0, 0.0, 0.0, 0.0, p), ConfigurationError);
}

TEST_CASE("observables of a fresh packet", "[pde][observables]") {
    const PhysParams p;
    const auto g = make_grid(-14.0, 18.0, 1024);
    const auto obs = observables(gaussian_packet(g, 2.0, 1.0, 0.0, 0.0, p), p);
    CHECK(obs.xbar == Approx(2.0).margin(1e-8));
    CHECK(obs.delta == Approx(1.0).margin(1e-6));
    CHECK(std::abs(obs.excess_kurtosis) <= 1e-6);
    CHECK(obs.k_t == Approx(0.25).epsilon(1e-8));

    WavePacket empty{g, std::vector<Complex>(g.n), 0.0};
    CHECK_THROWS_AS(observables(empty, p), DegenerateStateError);
    WavePacket wrong{g, std::vector<Complex>(g.n - 1, 1.0), 0.0};
    CHECK_THROWS_AS(observables(wrong, p), ShapeError);
}

TEST_CASE("madelung_decompose of a real Gaussian", "[pde][madelung]") {
    const PhysParams p;
    const auto g = make_grid(-16.0, 16.0, 1024);
    const auto w = gaussian_packet(g, 0.0, 1.0, 0.0, 0.0, p);
    const auto f = madelung_decompose(w, p);
    const AnsatzSlice s{0.0, 0.0, 1.0, 0.0};
    double v_worst = 0.0, rho_worst = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        rho_worst = std::max(rho_worst, std::abs(f.rho[i] - ansatz_density(s, g.x(i))));
        if (f.valid_mask[i]) v_worst = std::max(v_worst, std::abs(f.v_qu[i]));
        if (!f.valid_mask[i]) CHECK(std::isnan(f.V_qu[i]));
    }
    CHECK(v_worst <= 1e-8);
    CHECK(rho_worst <= 1e-12);
    CHECK(f.V_qu[g.n / 2] == Approx(0.25).epsilon(1e-8));
    CHECK(f.valid_mask[g.n / 2] == 1);
}

TEST_CASE("madelung_decompose round trip up to a global phase", "[pde][madelung][property]") {
    const PhysParams p = measured(1.0, 0.0, 2.0);
    const auto g = make_grid(-16.0, 16.0, 1024);
    for (double xbardot : {0.0, 1.7, -3.0}) {
        auto w = gaussian_packet(g, 0.5, 1.0, xbardot, 0.4, p);
        const Complex global = std::polar(1.0, 0.9);
        for (auto& z : w.psi) z *= global;
        const auto f = madelung_decompose(w, p);
        const std::size_t ref = g.n / 2;
        const Complex offset = w.psi[ref] / std::polar(std::sqrt(f.rho[ref]), f.S[ref]);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.n; ++i)
            if (f.valid_mask[i]) worst = std::max(worst, std::abs(std::polar(std::sqrt(f.rho[i]), f.S[i]) * offset - w.psi[i]));
        CHECK(worst <= 1e-10);
        CHECK(std::abs(offset) == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("wrap_phase maps into (-pi, pi]", "[pde][madelung]") {
    CHECK(wrap_phase(0.5) == 0.5);
    CHECK(wrap_phase(2.0 * std::numbers::pi + 0.25) == Approx(0.25));
    CHECK(wrap_phase(-std::numbers::pi) == Approx(std::numbers::pi));
    CHECK(wrap_phase(std::numbers::pi) == Approx(std::numbers::pi));
}

TEST_CASE("quantum force is linear with slope hbar^2/(4 m^2 delta^4) for Gaussians", "[pde][force]") {
    const PhysParams p;
    SECTION("delta = 1") {
        const auto g = make_grid(-16.0, 16.0, 1024);
        const auto fit = quantum_force_linearity(madelung_decompose(gaussian_packet(g, 0.0, 1.0, 0.0, 0.0, p), p), p);
        CHECK(fit.k_est == Approx(0.25).margin(1e-4));
        CHECK(fit.max_rel_dev <= 1e-4);
        CHECK(fit.samples >= 33);
    }
    SECTION("delta = 2") {
        const auto g = make_grid(-32.0, 32.0, 1024);
        const auto fit = quantum_force_linearity(madelung_decompose(gaussian_packet(g, 0.0, 2.0, 0.0, 0.0, p), p), p);
        CHECK(fit.k_est == Approx(1.0 / 64.0).epsilon(1e-4));
    }
    SECTION("non-Gaussian density violates the closure") {
        const auto g = make_grid(-16.0, 16.0, 1024);
        WavePacket w{g, std::vector<Complex>(g.n), 0.0};
        for (std::size_t i = 0; i < g.n; ++i) w.psi[i] = 1.0 / (std::cosh(g.x(i)) * std::sqrt(2.0));
        const auto fit = quantum_force_linearity(madelung_decompose(w, p), p);
        CHECK(fit.max_rel_dev > 0.1);
    }
    SECTION("too few points") {
        const auto g = make_grid(-100.0, 100.0, 64);
        CHECK_THROWS_AS(quantum_force_linearity(madelung_decompose(gaussian_packet(g, 0.0, 1.0, 0.0, 0.0, p), p), p),
                        InsufficientSupportError);
    }
}

TEST_CASE("continuity residual of the analytic ansatz fields", "[pde][continuity]") {
    const auto g = make_grid(-16.0, 16.0, 1024);

    SECTION("corrected velocity satisfies the measured continuity equation") {
        for (double tau : {0.5, 2.0}) {
            const PhysParams p = measured(1.0, 0.0, tau);
            const AnsatzSlice s{0.3, -0.8, 1.2, 0.35, tau};
            const auto f = ansatz_fields(g, s, p);
            std::vector<double> drho(g.n);
            for (std::size_t i = 0; i < g.n; ++i) drho[i] = ansatz_density_rate(s, g.x(i));
            const auto r = continuity_residual(f, drho, p, s.xbar, s.delta);
            CHECK(r.max_abs <= 1e-8);
            CHECK(r.samples > 100);
        }
    }
    SECTION("dropping the 1/(2 tau) term leaves (rho/2 tau)(z^2 - 1)") {
        const PhysParams p = measured(1.0, 0.0, 1.0);
        const AnsatzSlice s{0.3, -0.8, 1.2, 0.35, 1.0};
        const auto f = ansatz_fields(g, s, p, false);
        std::vector<double> drho(g.n);
        for (std::size_t i = 0; i < g.n; ++i) drho[i] = ansatz_density_rate(s, g.x(i));
        const auto r = continuity_residual(f, drho, p, s.xbar, s.delta);
        double oracle = 0.0, pointwise = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) {
            if (!f.valid_mask[i]) continue;
            const double z = (g.x(i) - s.xbar) / s.delta;
            const double expected = 0.5 * f.rho[i] * (z * z - 1.0);
            oracle = std::max(oracle, std::abs(expected));
            pointwise = std::max(pointwise, std::abs(r.values[i] - expected));
        }
        CHECK(r.max_abs == Approx(oracle).epsilon(1e-8));
        CHECK(pointwise <= 1e-8);
        CHECK(r.max_abs > 0.1);
    }
    SECTION("without measurement both velocity fields coincide") {
        const PhysParams p = measured(1.0, 0.0, PhysParams::infinite_tau());
        const AnsatzSlice s{0.3, -0.8, 1.2, 0.35};
        for (bool shift : {true, false}) {
            const auto f = ansatz_fields(g, s, p, shift);
            std::vector<double> drho(g.n);
            for (std::size_t i = 0; i < g.n; ++i) drho[i] = ansatz_density_rate(s, g.x(i));
            CHECK(continuity_residual(f, drho, p, s.xbar, s.delta).max_abs <= 1e-8);
        }
    }
    SECTION("shape mismatch") {
        const PhysParams p = measured(1.0, 0.0, 1.0);
        const auto f = ansatz_fields(g, AnsatzSlice{}, p);
        std::vector<double> drho(g.n - 1);
        CHECK_THROWS_AS(continuity_residual(f, drho, p, 0.0, 1.0), ShapeError);
    }
}

TEST_CASE("Euler residual along ODE trajectories", "[pde][euler]") {
    const auto g = make_grid(-16.0, 16.0, 1024);
    const DriveSpec drive = SinusoidDrive{1.0, 0.7, 0.0};

    auto residual_at = [&](const PhysParams& p, std::size_t index) {
        const auto traj = integrate_measurement({0.0, 1.0, 0.2, 1.0, 0.0}, p, drive, 3.0, 1e-3);
        const auto& s = traj.records[index].state;
        const auto acc = measurement_rhs(s, p, drive);
        const auto slice = slice_from(s, p);
        const auto f = ansatz_fields(g, slice, p);
        std::vector<double> dv(g.n);
        for (std::size_t i = 0; i < g.n; ++i)
            dv[i] = velocity_ansatz_rate(slice, p.width_scale() * acc.alpha_ddot, acc.xbar_ddot, g.x(i));
        Observables obs;
        obs.t = s.t;
        obs.xbar = s.xbar;
        obs.delta = slice.delta;
        obs.k_t = p.hbar * p.hbar / (4.0 * p.m * p.m * std::pow(slice.delta, 4));
        return std::pair{euler_residual(f, dv, p, drive, obs), slice.delta};
    };

    SECTION("consistent coefficient, tau = 2") {
        const auto p = measured(1.0, 1.0, 2.0);
        for (std::size_t idx : {0u, 1500u, 3000u}) CHECK(residual_at(p, idx).first.max_abs <= 1e-6);
    }
    SECTION("literal coefficient, tau = 2, is clearly nonzero") {
        auto p = measured(1.0, 1.0, 2.0);
        p.coeff_variant = CoeffVariant::PaperLiteral;
        const auto [r, delta] = residual_at(p, 1500);
        const double gap = 1.0 / 16.0 - 1.0 / 64.0;
        CHECK(r.max_abs >= 0.01 * gap * delta);
        // The residual is exactly gap * (x - xbar) on the mask.
        CHECK(r.max_abs > 4.0 * gap * delta);
    }
    SECTION("tau = 1 makes both variants agree") {
        for (CoeffVariant v : {CoeffVariant::DimensionallyConsistent, CoeffVariant::PaperLiteral}) {
            auto p = measured(1.0, 1.0, 1.0);
            p.coeff_variant = v;
            CHECK(residual_at(p, 2000).first.max_abs <= 1e-6);
        }
    }
    SECTION("shape mismatch") {
        const auto p = measured(1.0, 1.0, 2.0);
        const auto f = ansatz_fields(g, AnsatzSlice{}, p);
        std::vector<double> dv(g.n + 1);
        CHECK_THROWS_AS(euler_residual(f, dv, p, 0.0, Observables{}), ShapeError);
    }
}

TEST_CASE("coherent state tracks the classical oscillator", "[pde][evolve]") {
    const PhysParams p = measured(1.0, 0.0, PhysParams::infinite_tau());
    const double delta0 = std::sqrt(0.5);
    const auto g = make_grid(1.0 - 16.0 * delta0, 1.0 + 16.0 * delta0, 1024);
    const double dt = 1e-3;
    const auto steps = static_cast<std::size_t>(std::lround(4.0 * std::numbers::pi / dt));
    const auto res = evolve(gaussian_packet(g, 1.0, delta0, 0.0, 0.0, p), p, ZeroDrive{}, dt, steps);
    REQUIRE(res.history.size() == steps + 1);
    double dx = 0.0, dd = 0.0, kurt = 0.0;
    for (const auto& o : res.history) {
        dx = std::max(dx, std::abs(o.xbar - std::cos(o.t)));
        dd = std::max(dd, std::abs(o.delta - delta0) / delta0);
        kurt = std::max(kurt, std::abs(o.excess_kurtosis));
    }
    CHECK(dx <= 1e-3);
    CHECK(dd <= 1e-3);
    CHECK(kurt <= 1e-3);
    CHECK(res.history.back().t == Approx(steps * dt).epsilon(1e-12));
}

TEST_CASE("measured evolution conserves the norm over 1e4 steps", "[pde][evolve][norm]") {
    const PhysParams p = measured(1.0, 1.0, 2.0);
    const auto g = make_grid(-15.0, 17.0, 1024);
    const auto res = evolve(gaussian_packet(g, 1.0, 1.0, 0.0, 0.0, p), p, SinusoidDrive{1.0, 0.7, 0.0}, 1e-3, 10000);
    double drift = 0.0, kurt = 0.0;
    for (const auto& o : res.history) {
        drift = std::max(drift, std::abs(o.norm - 1.0));
        kurt = std::max(kurt, std::abs(o.excess_kurtosis));
    }
    CHECK(drift <= 1e-6);
    CHECK(kurt <= 1e-3);
    CHECK(res.cfl_exceeded == (1e-3 > cfl_limit(g, p)));
}

TEST_CASE("single step is first-order consistent with the PDE right-hand side", "[pde][evolve][convergence]") {
    const PhysParams p = measured(1.0, 1.0, 2.0);
    const auto g = make_grid(-15.0, 17.0, 1024);
    const DriveSpec drive = SinusoidDrive{1.0, 0.7, 0.3};
    const auto w0 = gaussian_packet(g, 1.0, 1.0, 0.4, 0.2, p);
    const auto rhs = schrodinger_rhs(w0, p, explicit_drive_value(drive, 0.0));
    auto error = [&](double dt) {
        const auto w1 = evolve(w0, p, drive, dt, 1).packet;
        std::vector<Complex> quotient(g.n);
        for (std::size_t i = 0; i < g.n; ++i) quotient[i] = (w1.psi[i] - w0.psi[i]) / dt;
        return max_abs_diff(quotient, rhs);
    };
    const double ratio = error(1e-4) / error(5e-5);
    INFO("ratio = " << ratio);
    CHECK(ratio == Approx(2.0).margin(0.2));
}

TEST_CASE("evolving velocity field keeps the ansatz slope", "[pde][evolve][madelung]") {
    const PhysParams p = measured(1.0, 1.0, 2.0);
    const auto g = make_grid(-15.0, 17.0, 1024);
    const double dt = 1e-3;
    const DriveSpec drive = SinusoidDrive{1.0, 0.7, 0.0};
    const auto first = evolve(gaussian_packet(g, 1.0, 1.0, 0.0, 0.0, p), p, drive, dt, 1500);
    const auto next = evolve(first.packet, p, drive, dt, 1);
    const auto& h = first.history;
    const double delta = h.back().delta;
    const double deltadot = (next.history.back().delta - h[h.size() - 2].delta) / (2.0 * dt);
    const auto f = madelung_decompose(first.packet, p);
    const double slope = velocity_slope_fit(f, h.back().xbar, 3.0 * delta);
    CHECK(slope == Approx(deltadot / delta + 0.5 / p.tau).margin(1e-3));
}

TEST_CASE("evolve argument validation", "[pde][evolve][errors]") {
    const auto g = make_grid(-16.0, 16.0, 256);
    const auto w = gaussian_packet(g, 0.0, 1.0, 0.0, 0.0, PhysParams{});
    CHECK_THROWS_AS(evolve(w, measured(1.0, 1.0, 2.0), ZeroDrive{}, 0.0, 1), ConfigurationError);
    CHECK_THROWS_AS(evolve(w, measured(1.0, 0.0, 2.0), ConservingDrive{}, 1e-3, 1), ConfigurationError);
    CHECK_THROWS_AS(evolve(w, measured(1.0, 1.0, PhysParams::infinite_tau()), ConservingDrive{}, 1e-3, 1),
                    ConfigurationError);
    CHECK(evolve(w, measured(1.0, 1.0, 2.0), ZeroDrive{}, 1.0, 1).cfl_exceeded);
}
