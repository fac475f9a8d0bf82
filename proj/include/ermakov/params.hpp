#pragma once

#include "ermakov/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace ermakov {

/// Which constant accompanies omega^2 in the reduced width equation.
///
/// Expanding (d/dt ln delta + 1/(2 tau))^2 gives 1/(4 tau^2), the only choice
/// with units of omega^2. The literal 1/(4 tau^4) is kept so the discrepancy
/// can be demonstrated numerically.
enum class CoeffVariant {
    DimensionallyConsistent,  // 1/(4 tau^2)
    PaperLiteral,             // 1/(4 tau^4)
};

inline std::string_view to_string(CoeffVariant v) {
    return v == CoeffVariant::DimensionallyConsistent ? "consistent" : "paper_literal";
}

inline CoeffVariant coeff_variant_from_string(std::string_view s) {
    if (s == "consistent" || s == "dimensionally_consistent") return CoeffVariant::DimensionallyConsistent;
    if (s == "paper_literal" || s == "literal") return CoeffVariant::PaperLiteral;
    throw ConfigurationError("unknown coeff_variant '" + std::string(s) + "'");
}

/// Physical constants of the measured oscillator.
///
/// `tau` may be `infinite_tau()`, which switches the measurement off
/// (1/tau = 0). Defaults are the nondimensional units hbar = m = 1.
struct PhysParams {
    double m = 1.0;
    double hbar = 1.0;
    double omega = 0.0;
    double lambda = 0.0;
    double tau = std::numeric_limits<double>::infinity();
    CoeffVariant coeff_variant = CoeffVariant::DimensionallyConsistent;

    static constexpr double infinite_tau() noexcept { return std::numeric_limits<double>::infinity(); }

    bool measurement_off() const noexcept { return std::isinf(tau); }

    double inv_tau() const noexcept { return measurement_off() ? 0.0 : 1.0 / tau; }

    /// Constant C_tau added to omega^2 in the width equation, per variant.
    double measurement_coefficient() const noexcept { return measurement_coefficient(coeff_variant); }

    double measurement_coefficient(CoeffVariant v) const noexcept {
        const double g = inv_tau();
        return v == CoeffVariant::DimensionallyConsistent ? 0.25 * g * g : 0.25 * g * g * g * g;
    }

    /// (hbar^2 / 4 m^2)^{1/4}: converts the dimensionless alpha into delta.
    double width_scale() const noexcept { return std::sqrt(hbar / (2.0 * m)); }
};

inline void validate(const PhysParams& p) {
    if (!(p.m > 0.0) || !std::isfinite(p.m)) throw ConfigurationError("params.m must be finite and > 0");
    if (!(p.hbar > 0.0) || !std::isfinite(p.hbar)) throw ConfigurationError("params.hbar must be finite and > 0");
    if (!(p.omega >= 0.0) || !std::isfinite(p.omega)) throw ConfigurationError("params.omega must be finite and >= 0");
    if (!std::isfinite(p.lambda)) throw ConfigurationError("params.lambda must be finite");
    if (!(p.tau > 0.0)) throw ConfigurationError("params.tau must be > 0 (or infinite)");
}

/// delta = (hbar^2/4m^2)^{1/4} alpha.
inline double delta_from_alpha(double alpha, const PhysParams& p) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("delta_from_alpha: alpha must be finite and > 0");
    return p.width_scale() * alpha;
}

inline double alpha_from_delta(double delta, const PhysParams& p) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("alpha_from_delta: delta must be finite and > 0");
    return delta / p.width_scale();
}

} // namespace ermakov
