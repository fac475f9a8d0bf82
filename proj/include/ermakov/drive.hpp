#pragma once

#include "ermakov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ermakov {

struct ZeroDrive {};

struct ConstantDrive {
    double value = 0.0;
};

/// X(t) = amplitude * cos(frequency * t + phase).
struct SinusoidDrive {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
};

/// State-dependent drive that keeps the invariant constant. Evaluated
/// from the reduced state by `conserving_drive`.
struct ConservingDrive {};

/// Piecewise-linear X(t) through (t, X) samples. Held constant outside the
/// tabulated range.
class TabulatedDrive {
public:
    explicit TabulatedDrive(std::vector<std::pair<double, double>> samples) : samples_(std::move(samples)) {
        if (samples_.empty()) throw ConfigurationError("tabulated drive needs at least one sample");
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (!std::isfinite(samples_[i].first) || !std::isfinite(samples_[i].second))
                throw ConfigurationError("tabulated drive samples must be finite");
            if (i > 0 && !(samples_[i].first > samples_[i - 1].first))
                throw ConfigurationError("tabulated drive times must be strictly increasing");
        }
    }

    double operator()(double t) const {
        if (t <= samples_.front().first) return samples_.front().second;
        if (t >= samples_.back().first) return samples_.back().second;
        auto hi = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](double v, const auto& s) { return v < s.first; });
        auto lo = std::prev(hi);
        const double w = (t - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    }

    const std::vector<std::pair<double, double>>& samples() const noexcept { return samples_; }

private:
    std::vector<std::pair<double, double>> samples_;
};

/// The classical drive X(t) coupling to the packet through lambda * x * X(t).
using DriveSpec = std::variant<ZeroDrive, ConstantDrive, SinusoidDrive, ConservingDrive, TabulatedDrive>;

inline bool is_state_dependent(const DriveSpec& d) noexcept { return std::holds_alternative<ConservingDrive>(d); }

/// X(t) for the explicit (time-only) drives. Throws for the conserving drive,
/// which needs the reduced state.
inline double explicit_drive_value(const DriveSpec& d, double t) {
    struct Visitor {
        double t;
        double operator()(const ZeroDrive&) const { return 0.0; }
        double operator()(const ConstantDrive& c) const { return c.value; }
        double operator()(const SinusoidDrive& s) const { return s.amplitude * std::cos(s.frequency * t + s.phase); }
        double operator()(const ConservingDrive&) const {
            throw ConfigurationError("conserving drive depends on the reduced state, not on t alone");
        }
        double operator()(const TabulatedDrive& tab) const { return tab(t); }
    };
    return std::visit(Visitor{t}, d);
}

inline std::string drive_name(const DriveSpec& d) {
    static constexpr const char* names[] = {"zero", "constant", "sinusoid", "conserving", "tabulated"};
    return names[d.index()];
}

} // namespace ermakov
