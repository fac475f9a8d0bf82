#include <catch2/catch_amalgamated.hpp>

#include "ermakov/ode.hpp"

#include <cmath>
#include <random>

using namespace ermakov;
using Catch::Approx;

namespace {

PhysParams measured(double omega, double lambda, double tau) {
    PhysParams p;
    p.omega = omega;
    p.lambda = lambda;
    p.tau = tau;
    return p;
}

// Random admissible reduced states for property checks.
struct StateGen {
    std::mt19937_64 rng{20261014};
    std::uniform_real_distribution<double> alpha{0.3, 3.0};
    std::uniform_real_distribution<double> any{-2.0, 2.0};

    ErmakovState operator()() { return {any(rng), alpha(rng), any(rng), any(rng), any(rng)}; }
};

} // namespace

TEST_CASE("classical_rhs evaluates both oscillator equations", "[ode][classical]") {
    const auto w1 = OmegaSpec::constant(1.0);
    auto a = classical_rhs({0.0, 1.0, 0.0, 1.0, 0.0}, w1);
    CHECK(a.q_ddot == -1.0);
    CHECK(a.alpha_ddot == 0.0);

    auto b = classical_rhs({0.0, 0.0, 1.0, 2.0, 0.0}, OmegaSpec::constant(0.0));
    CHECK(b.q_ddot == 0.0);
    CHECK(b.alpha_ddot == 0.125);

    auto c = classical_rhs({0.0, 1.0, 0.0, 1.0, 0.0}, OmegaSpec::sinusoidal(1.0, 0.1, 1.0));
    CHECK(c.q_ddot == -1.0);
    CHECK(c.alpha_ddot == 0.0);
}

TEST_CASE("classical_rhs rejects non-finite and non-positive states", "[ode][classical][errors]") {
    const auto w = OmegaSpec::constant(1.0);
    CHECK_THROWS_AS(classical_rhs({0.0, NAN, 0.0, 1.0, 0.0}, w), InvalidStateError);
    CHECK_THROWS_AS(classical_rhs({0.0, 1.0, INFINITY, 1.0, 0.0}, w), InvalidStateError);
    CHECK_THROWS_AS(classical_rhs({0.0, 1.0, 0.0, 0.0, 0.0}, w), InvalidStateError);
}

TEST_CASE("OmegaSpec requires |epsilon| < 1", "[ode][classical][errors]") {
    CHECK_THROWS_AS(OmegaSpec::sinusoidal(1.0, 1.0, 1.0), ConfigurationError);
    CHECK_THROWS_AS(OmegaSpec::sinusoidal(-1.0, 0.1, 1.0), ConfigurationError);
    CHECK(OmegaSpec::sinusoidal(2.0, 0.5, 1.0).omega_squared(std::numbers::pi / 2) == Approx(6.0));
}

TEST_CASE("lewis_invariant direct values", "[ode][invariant]") {
    CHECK(lewis_invariant(1.0, 0.0, 1.0, 0.0) == 0.5);
    CHECK(lewis_invariant(0.0, 2.0, 1.0, 0.0) == 2.0);
    CHECK_THROWS_AS(lewis_invariant(1.0, 0.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(lewis_invariant(1.0, 0.0, -1.0, 0.0), DomainError);
}

TEST_CASE("constant-frequency run matches the closed form q = cos t, alpha = 1", "[ode][classical][integrate]") {
    const auto traj = integrate_classical({0.0, 1.0, 0.0, 1.0, 0.0}, OmegaSpec::constant(1.0), 50.0, 1e-3);
    REQUIRE(traj.records.size() == 50001);
    double worst_invariant = 0.0, worst_q = 0.0;
    for (const auto& r : traj.records) {
        worst_invariant = std::max(worst_invariant, std::abs(r.invariant - 0.5));
        worst_q = std::max(worst_q, std::abs(r.state.q - std::cos(r.state.t)));
    }
    CHECK(worst_invariant <= 5e-7);
    CHECK(worst_q <= 1e-9);
    CHECK(traj.records.back().state.t == Approx(50.0).epsilon(1e-15));
}

TEST_CASE("Lewis invariant is conserved for modulated frequencies", "[ode][classical][property]") {
    for (double eps : {0.1, -0.3, 0.5}) {
        for (double modulation : {0.5, 1.0, 3.7}) {
            const auto traj = integrate_classical({0.0, 1.0, 0.3, 1.2, -0.1},
                                                  OmegaSpec::sinusoidal(1.0, eps, modulation), 50.0, 1e-3);
            std::vector<double> inv;
            for (const auto& r : traj.records) inv.push_back(r.invariant);
            const auto [lo, hi] = std::minmax_element(inv.begin(), inv.end());
            INFO("eps = " << eps << ", modulation = " << modulation);
            CHECK((*hi - *lo) / inv.front() <= 1e-6);
        }
    }
}

TEST_CASE("measurement_rhs direct values", "[ode][measurement]") {
    const DriveSpec zero = ZeroDrive{};

    SECTION("no measurement and no coupling reduces to the classical pair") {
        const auto p = measured(1.0, 0.0, PhysParams::infinite_tau());
        const auto a = measurement_rhs({0.0, 1.0, 0.0, 0.7, 0.0}, p, zero);
        CHECK(a.alpha_ddot == 0.0);
        CHECK(a.xbar_ddot == -0.7);
    }
    SECTION("tau = 1 consistent variant") {
        const auto p = measured(1.0, 0.0, 1.0);
        CHECK(measurement_rhs({0.0, 1.0, 0.0, 0.0, 0.0}, p, zero).alpha_ddot == -0.25);
    }
    SECTION("constant drive enters the centroid equation") {
        const auto p = measured(1.0, 1.0, 1.0);
        CHECK(measurement_rhs({0.0, 1.0, 0.0, 1.0, 0.0}, p, ConstantDrive{2.0}).xbar_ddot == -3.0);
    }
    SECTION("literal variant uses 1/(4 tau^4)") {
        auto p = measured(1.0, 0.0, 2.0);
        p.coeff_variant = CoeffVariant::PaperLiteral;
        CHECK(measurement_rhs({0.0, 1.0, 0.0, 0.0, 0.0}, p, zero).alpha_ddot == Approx(-1.0 / 64.0));
    }
}

TEST_CASE("measurement_rhs width collapse and invalid state", "[ode][measurement][errors]") {
    const auto p = measured(1.0, 0.0, 2.0);
    CHECK_THROWS_AS(measurement_rhs({0.0, 1e-9, 0.0, 0.0, 0.0}, p, ZeroDrive{}), WidthCollapseError);
    CHECK_THROWS_AS(measurement_rhs({0.0, 1.0, NAN, 0.0, 0.0}, p, ZeroDrive{}), InvalidStateError);
    CHECK_NOTHROW(measurement_rhs({0.0, 1e-8, 0.0, 0.0, 0.0}, p, ZeroDrive{}));
}

TEST_CASE("measurement model without measurement equals the classical model exactly", "[ode][property]") {
    StateGen gen;
    for (int i = 0; i < 200; ++i) {
        const auto s = gen();
        const double omega = 0.1 + 0.01 * i;
        const auto p = measured(omega, 0.0, PhysParams::infinite_tau());
        const auto m = measurement_rhs(s, p, ZeroDrive{});
        const auto c = classical_rhs({s.t, s.xbar, s.xbardot, s.alpha, s.alphadot}, OmegaSpec::constant(omega));
        REQUIRE(m.alpha_ddot == c.alpha_ddot);
        REQUIRE(m.xbar_ddot == c.q_ddot);
    }
}

TEST_CASE("els_invariant direct values", "[ode][invariant]") {
    CHECK(els_invariant({0.0, 1.0, 0.0, 1.0, 0.0}) == 0.5);
    CHECK(els_invariant({0.0, 2.0, 0.0, 0.0, 0.0}) == 0.0);
    CHECK(els_invariant({0.0, 1.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(els_invariant({0.0, 0.0, 1.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("els_invariant is non-negative and vanishes only at the null set", "[ode][invariant][property]") {
    StateGen gen;
    for (int i = 0; i < 500; ++i) {
        const auto s = gen();
        REQUIRE(els_invariant(s) >= 0.0);
    }
    // xbar = 0 and xbardot alpha = alphadot xbar  =>  xbardot = 0.
    CHECK(els_invariant({0.0, 1.7, 0.4, 0.0, 0.0}) == 0.0);
    CHECK(els_invariant({0.0, 1.7, 0.4, 0.0, 1e-3}) > 0.0);
}

TEST_CASE("els_invariant_rate direct values", "[ode][rate]") {
    SECTION("reference evaluation") {
        const auto p = measured(1.0, 1.0, 1.0);
        CHECK(els_invariant_rate({0.0, 1.0, 0.0, 1.0, 1.0}, p, ConstantDrive{1.0}) == Approx(-0.75).epsilon(1e-15));
    }
    SECTION("no measurement and no drive") {
        const auto p = measured(1.3, 0.7, PhysParams::infinite_tau());
        StateGen gen;
        for (int i = 0; i < 50; ++i) REQUIRE(els_invariant_rate(gen(), p, ZeroDrive{}) == 0.0);
    }
    SECTION("conserving drive gives exactly zero") {
        const auto p = measured(1.0, 0.8, 2.0);
        StateGen gen;
        for (int i = 0; i < 50; ++i) REQUIRE(els_invariant_rate(gen(), p, ConservingDrive{}) == 0.0);
    }
    SECTION("xbar = 0 is regular") {
        const auto p = measured(1.0, 1.0, 1.0);
        CHECK(std::isfinite(els_invariant_rate({0.0, 1.0, 0.3, 0.0, 1.0}, p, ConstantDrive{1.0})));
    }
}

TEST_CASE("els_invariant_rate equals the directional derivative of I along the flow", "[ode][rate][property]") {
    // Oracle: (I(y + h f) - I(y - h f)) / (2h), independent of the closed-form rate.
    StateGen gen;
    const double h = 1e-6;
    for (CoeffVariant v : {CoeffVariant::DimensionallyConsistent, CoeffVariant::PaperLiteral}) {
        auto p = measured(0.9, 0.6, 1.7);
        p.coeff_variant = v;
        for (const DriveSpec& d : {DriveSpec{ZeroDrive{}}, DriveSpec{SinusoidDrive{1.0, 0.7, 0.2}},
                                   DriveSpec{ConstantDrive{-0.4}}}) {
            for (int i = 0; i < 40; ++i) {
                const auto s = gen();
                const auto a = measurement_rhs(s, p, d);
                auto shifted = [&](double sign) {
                    return ErmakovState{s.t, s.alpha + sign * h * s.alphadot, s.alphadot + sign * h * a.alpha_ddot,
                                        s.xbar + sign * h * s.xbardot, s.xbardot + sign * h * a.xbar_ddot};
                };
                const double fd = (els_invariant(shifted(1.0)) - els_invariant(shifted(-1.0))) / (2.0 * h);
                const double exact = els_invariant_rate(s, p, d);
                REQUIRE(exact == Approx(fd).margin(1e-7).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("conserving_drive values and errors", "[ode][drive]") {
    const auto p = measured(1.0, 2.0, 1.0);
    CHECK(conserving_drive({0.0, 1.0, 1.0, 0.0, 0.5}, p) == 0.0);
    CHECK(conserving_drive({0.0, 1.0, 1.0, 3.0, 0.0}, p) == Approx(1.875).epsilon(1e-15));
    CHECK_THROWS_AS(conserving_drive({0.0, 1.0, 1.0, 3.0, 0.0}, measured(1.0, 0.0, 1.0)), ConfigurationError);
    CHECK_THROWS_AS(integrate_measurement({}, measured(1.0, 0.0, 1.0), ConservingDrive{}, 1.0, 1e-3),
                    ConfigurationError);
}

TEST_CASE("delta_from_alpha scale and round trip", "[ode][units]") {
    PhysParams p;
    CHECK(delta_from_alpha(1.0, p) == Approx(0.70710678118654752).epsilon(1e-15));
    p.hbar = 2.0;
    CHECK(delta_from_alpha(1.0, p) == 1.0);
    CHECK_THROWS_AS(delta_from_alpha(0.0, p), DomainError);
    CHECK_THROWS_AS(alpha_from_delta(-1.0, p), DomainError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(1e-3, 1e3);
    for (int i = 0; i < 200; ++i) {
        PhysParams q;
        q.hbar = dist(rng);
        q.m = dist(rng);
        const double a = dist(rng);
        REQUIRE(alpha_from_delta(delta_from_alpha(a, q), q) == Approx(a).epsilon(1e-14));
    }
}

TEST_CASE("tabulated drive interpolates linearly and validates times", "[ode][drive]") {
    const TabulatedDrive tab({{0.0, 1.0}, {1.0, 3.0}, {3.0, -1.0}});
    CHECK(tab(-1.0) == 1.0);
    CHECK(tab(0.5) == 2.0);
    CHECK(tab(2.0) == 1.0);
    CHECK(tab(10.0) == -1.0);
    CHECK_THROWS_AS(TabulatedDrive({{0.0, 1.0}, {0.0, 2.0}}), ConfigurationError);
    CHECK_THROWS_AS(TabulatedDrive({}), ConfigurationError);
}

TEST_CASE("integrate_measurement records are uniform and deterministic", "[ode][integrate]") {
    const auto p = measured(1.0, 1.0, 2.0);
    const ErmakovState init{0.0, 1.2, 0.1, 0.8, -0.2};
    const DriveSpec d = SinusoidDrive{1.0, 0.7, 0.0};
    const auto a = integrate_measurement(init, p, d, 5.0, 1e-3);
    const auto b = integrate_measurement(init, p, d, 5.0, 1e-3);
    REQUIRE(a.records.size() == 5001);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        REQUIRE(a.records[i].state.t == init.t + static_cast<double>(i) * 1e-3);
        REQUIRE(a.records[i].state.alpha == b.records[i].state.alpha);
        REQUIRE(a.records[i].state.xbar == b.records[i].state.xbar);
        REQUIRE(a.records[i].invariant == els_invariant(a.records[i].state));
        REQUIRE(a.records[i].delta == delta_from_alpha(a.records[i].state.alpha, p));
    }
    CHECK_THROWS_AS(integrate_measurement(init, p, d, 5.0, 0.0), ConfigurationError);
    CHECK_THROWS_AS(integrate_measurement(init, p, d, -1.0, 1e-3), ConfigurationError);
}

TEST_CASE("analytic rate matches the centered difference of I along a trajectory", "[ode][rate][integrate]") {
    const auto p = measured(1.0, 1.0, 2.0);
    const auto traj = integrate_measurement({0.0, 1.0, 0.0, 1.0, 0.0}, p, SinusoidDrive{1.0, 0.7, 0.0}, 20.0, 1e-3);
    const auto fd = numeric_invariant_rate(traj);
    double scale = 0.0, worst = 0.0;
    for (const auto& r : traj.records) scale = std::max(scale, std::abs(r.rate));
    for (std::size_t i = 1; i + 1 < fd.size(); ++i) worst = std::max(worst, std::abs(fd[i] - traj.records[i].rate));
    CHECK(scale > 0.1);
    CHECK(worst / scale <= 1e-4);
}

TEST_CASE("conserving drive keeps the invariant constant", "[ode][drive][integrate]") {
    for (double tau : {0.5, 2.0, 7.0}) {
        for (CoeffVariant v : {CoeffVariant::DimensionallyConsistent, CoeffVariant::PaperLiteral}) {
            auto p = measured(1.0, 0.5, tau);
            p.coeff_variant = v;
            const auto traj = integrate_measurement({0.0, 1.3, -0.2, 1.0, 0.4}, p, ConservingDrive{}, 20.0, 1e-3);
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& r : traj.records) {
                lo = std::min(lo, r.invariant);
                hi = std::max(hi, r.invariant);
            }
            INFO("tau = " << tau << ", variant = " << to_string(v));
            CHECK((hi - lo) / traj.records.front().invariant <= 1e-6);
            CHECK(traj.records[100].drive == conserving_drive(traj.records[100].state, p));
        }
    }
}

TEST_CASE("RK4 step halving shows fourth-order convergence", "[ode][integrate][convergence]") {
    const auto p = measured(3.0, 1.0, 2.0);
    const ErmakovState init{0.0, 1.0, 0.0, 1.0, 0.0};
    const DriveSpec d = SinusoidDrive{1.0, 0.7, 0.0};
    auto end = [&](double dt) { return integrate_measurement(init, p, d, 10.0, dt).records.back().state; };
    const auto s1 = end(4e-3), s2 = end(2e-3), s3 = end(1e-3);
    auto dist = [](const ErmakovState& a, const ErmakovState& b) {
        return std::hypot(a.alpha - b.alpha, a.alphadot - b.alphadot, std::hypot(a.xbar - b.xbar, a.xbardot - b.xbardot));
    };
    const double ratio = dist(s1, s2) / dist(s2, s3);
    INFO("ratio = " << ratio);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("width collapse aborts with the partial trajectory", "[ode][integrate][errors]") {
    const auto p = measured(2.0, 0.0, PhysParams::infinite_tau());
    try {
        (void)integrate_measurement({0.0, 1.0, 0.0, 0.0, 0.0}, p, ZeroDrive{}, 10.0, 1e-3, 0.9);
        FAIL("expected an aborted trajectory");
    } catch (const AbortedMeasurementTrajectory& e) {
        const auto& recs = e.partial().records;
        REQUIRE(!recs.empty());
        CHECK(recs.back().state.alpha >= 0.9);
        CHECK(recs.size() < 10001);
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
}
