#pragma once

// Ordinary periodogram ordinates |sum_t x_t e^{-i w t}|^2 / n at the Fourier
// frequencies in (0, pi): an FFTW fast path and a direct-summation path.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "ahp/regress.hpp"

namespace ahp {

namespace detail {

// The FFTW planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

}  // namespace detail

/// True when every prime factor of n is at most 7.
inline bool is_fft_friendly(std::size_t n) {
    if (n == 0) return false;
    for (std::size_t f : {2u, 3u, 5u, 7u})
        while (n % f == 0) n /= f;
    return n == 1;
}

/// Periodogram of x (not centred here) by direct summation with t = 1..n.
inline std::vector<double> pg_direct(std::span<const double> x) {
    const std::size_t n = x.size();
    const TrigBasis basis(n);
    std::vector<double> out(fourier_count(n));
    for (std::size_t k = 1; k <= out.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 1; t <= n; ++t) {
            re += x[t - 1] * basis.cos_at(k, t);
            im -= x[t - 1] * basis.sin_at(k, t);
        }
        out[k - 1] = (re * re + im * im) / static_cast<double>(n);
    }
    return out;
}

/// Periodogram of x by real-to-complex FFT.
inline std::vector<double> pg_fft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) throw std::domain_error("pg_fft: n must be >= 4");
    std::unique_ptr<double, detail::FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, detail::FftwFree> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    if (!in || !out) throw std::bad_alloc();
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("pg_fft: FFTW planning failed");
    for (std::size_t t = 0; t < n; ++t) in.get()[t] = x[t];
    fftw_execute(plan);
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> pg(fourier_count(n));
    for (std::size_t k = 1; k <= pg.size(); ++k) {
        const double re = out.get()[k][0], im = out.get()[k][1];
        pg[k - 1] = (re * re + im * im) / static_cast<double>(n);
    }
    return pg;
}

/// Periodogram of x, choosing the FFT for FFT-friendly lengths.
inline std::vector<double> raw_periodogram(std::span<const double> x) {
    return is_fft_friendly(x.size()) ? pg_fft(x) : pg_direct(x);
}

/// DFT sum_{t=1}^{n} x_t e^{-i w_k t} by direct summation.
inline std::complex<double> dft_at(std::span<const double> x, std::size_t k) {
    const TrigBasis basis(x.size());
    double re = 0.0, im = 0.0;
    for (std::size_t t = 1; t <= x.size(); ++t) {
        re += x[t - 1] * basis.cos_at(k, t);
        im -= x[t - 1] * basis.sin_at(k, t);
    }
    return {re, im};
}

}  // namespace ahp
