#pragma once

// Thin RAII layer over FFTW for periodic grids: in-place complex transforms
// and spectral derivatives.

#include "ermakov/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

namespace ermakov {

using Complex = std::complex<double>;

namespace detail {

// FFTW's planner is not thread-safe; execution with distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace detail

class FourierTransform {
public:
    explicit FourierTransform(std::size_t n) : n_(n) {
        if (n < 2) throw ConfigurationError("FourierTransform: n must be >= 2");
        std::vector<Complex> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        std::lock_guard lock(detail::fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags);
        backward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags);
        if (!forward_ || !backward_) throw ConfigurationError("FourierTransform: FFTW planning failed");
    }

    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;

    ~FourierTransform() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    std::size_t size() const noexcept { return n_; }

    void forward(std::span<Complex> data) const { run(forward_, data); }

    /// Inverse transform including the 1/n normalisation.
    void backward(std::span<Complex> data) const {
        run(backward_, data);
        const double s = 1.0 / static_cast<double>(n_);
        for (auto& z : data) z *= s;
    }

private:
    void run(fftw_plan plan, std::span<Complex> data) const {
        if (data.size() != n_) throw ShapeError("FourierTransform: size mismatch");
        auto* buf = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan, buf, buf);
    }

    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Angular wavenumbers in FFTW order for a periodic box of length `length`.
inline std::vector<double> wavenumbers(std::size_t n, double length) {
    std::vector<double> k(n);
    const double dk = 2.0 * std::numbers::pi / length;
    for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<double>(j);
        k[j] = (j < (n + 1) / 2) ? jj * dk : (jj - static_cast<double>(n)) * dk;
    }
    return k;
}

/// Derivatives of a periodic complex field. The Nyquist mode is dropped for
/// odd orders.
class SpectralDifferentiator {
public:
    SpectralDifferentiator(std::size_t n, double length) : fft_(n), k_(wavenumbers(n, length)) {}

    std::size_t size() const noexcept { return k_.size(); }
    const std::vector<double>& k() const noexcept { return k_; }
    const FourierTransform& fft() const noexcept { return fft_; }

    std::vector<Complex> derivative(std::span<const Complex> f, int order) const {
        std::vector<Complex> out(f.begin(), f.end());
        fft_.forward(out);
        const std::size_t n = out.size();
        for (std::size_t j = 0; j < n; ++j) {
            const bool nyquist = (n % 2 == 0) && j == n / 2;
            if (nyquist && order % 2 == 1) {
                out[j] = 0.0;
                continue;
            }
            out[j] *= std::pow(Complex(0.0, k_[j]), order);
        }
        fft_.backward(out);
        return out;
    }

    std::vector<double> derivative(std::span<const double> f, int order) const {
        std::vector<Complex> z(f.begin(), f.end());
        const auto d = derivative(std::span<const Complex>(z), order);
        std::vector<double> out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
        return out;
    }

private:
    FourierTransform fft_;
    std::vector<double> k_;
};

} // namespace ermakov
