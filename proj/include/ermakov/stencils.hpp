#pragma once

// Central finite-difference stencils on uniform spacing.

#include "ermakov/errors.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace ermakov::stencil {

/// Weights for offsets -R..R, to be divided by h^order.
template <std::size_t R>
struct Central {
    static constexpr std::size_t radius = R;
    int order;
    double denominator;
    std::array<double, 2 * R + 1> weights;
};

// Fourth-order accurate, five points.
inline constexpr Central<2> d1_o4{1, 12.0, {1.0, -8.0, 0.0, 8.0, -1.0}};
inline constexpr Central<2> d2_o4{2, 12.0, {-1.0, 16.0, -30.0, 16.0, -1.0}};
// Sixth-order accurate.
inline constexpr Central<3> d1_o6{1, 60.0, {-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0}};
inline constexpr Central<3> d2_o6{2, 180.0, {2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0}};
inline constexpr Central<4> d3_o6{3, 240.0, {-7.0, 72.0, -338.0, 488.0, 0.0, -488.0, 338.0, -72.0, 7.0}};

inline double power(double h, int order) {
    double r = 1.0;
    for (int i = 0; i < order; ++i) r *= h;
    return r;
}

/// Derivative of a callable f at x with step h.
template <std::size_t R, class F>
double apply(const Central<R>& s, F&& f, double x, double h) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 2 * R + 1; ++j) {
        const double w = s.weights[j];
        if (w == 0.0) continue;
        acc += w * f(x + (static_cast<double>(j) - static_cast<double>(R)) * h);
    }
    return acc / (s.denominator * power(h, s.order));
}

/// Derivative of sampled values at index i; i must have a full stencil.
template <std::size_t R>
double apply(const Central<R>& s, std::span<const double> v, std::size_t i, double h) {
    if (i < R || i + R >= v.size()) throw ShapeError("stencil::apply: incomplete stencil");
    double acc = 0.0;
    for (std::size_t j = 0; j < 2 * R + 1; ++j) acc += s.weights[j] * v[i + j - R];
    return acc / (s.denominator * power(h, s.order));
}

/// Derivative over a whole array; the R points at each end use
/// second-order one-sided / narrowed differences (first derivative only).
template <std::size_t R>
std::vector<double> differentiate(const Central<R>& s, std::span<const double> v, double h) {
    static_assert(R >= 1);
    if (s.order != 1) throw ShapeError("stencil::differentiate supports first derivatives only");
    const std::size_t n = v.size();
    if (n < 2 * R + 1) throw ShapeError("stencil::differentiate: array shorter than stencil");
    std::vector<double> out(n);
    for (std::size_t i = R; i + R < n; ++i) out[i] = apply(s, v, i, h);
    for (std::size_t i = 0; i < R; ++i) {
        out[i] = (-3.0 * v[i] + 4.0 * v[i + 1] - v[i + 2]) / (2.0 * h);
        const std::size_t k = n - 1 - i;
        out[k] = (3.0 * v[k] - 4.0 * v[k - 1] + v[k - 2]) / (2.0 * h);
    }
    return out;
}

} // namespace ermakov::stencil
