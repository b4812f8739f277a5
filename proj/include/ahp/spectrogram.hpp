#pragma once

// Sliding-window periodogram of a nonstationary series: each window is
// analysed on its own (centring constant and sd-relative psi re-estimated)
// and the log ordinates are stacked by window.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahp/parallel.hpp"
#include "ahp/periodogram.hpp"

namespace ahp {

struct SpectrogramResult {
    std::size_t window_len = 0;
    std::size_t hop = 0;
    std::vector<std::size_t> starts;   // 0-based first sample of each window
    std::vector<double> centers;       // 0-based window centre (start + (len - 1) / 2)
    std::vector<double> freqs;         // angular
    std::vector<double> values;        // row-major windows x freqs, natural log
    std::string estimator;
    bool log_applied = true;
    std::size_t nonconverged = 0;

    std::size_t windows() const noexcept { return starts.size(); }
    double at(std::size_t w, std::size_t i) const { return values[w * freqs.size() + i]; }
};

/// floor((n - window_len) / hop) + 1; the tail past the last full window is dropped.
inline std::size_t spectrogram_window_count(std::size_t n, std::size_t window_len, std::size_t hop) {
    if (n < window_len) return 0;
    return (n - window_len) / hop + 1;
}

/// log(x + 1e-12 * mean(x)). An all-zero window maps to log(DBL_MIN).
inline std::vector<double> log_ordinates(std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] + 1e-12 * mean;
        out[i] = v > 0.0 ? std::log(v) : std::log(DBL_MIN);
    }
    return out;
}

inline SpectrogramResult ahp_spectrogram(std::span<const double> y, std::size_t window_len, std::size_t overlap,
                                         const EstimatorSpec& est, const SolverConfig& cfg = {},
                                         unsigned threads = 1) {
    if (window_len < 16) throw std::domain_error("spectrogram: window length must be >= 16");
    if (overlap >= window_len) throw std::domain_error("spectrogram: overlap must be smaller than the window");
    if (y.size() < window_len) throw std::domain_error("spectrogram: series shorter than one window");
    est.validate();

    SpectrogramResult r;
    r.window_len = window_len;
    r.hop = window_len - overlap;
    r.estimator = label(est);
    r.freqs = fourier_frequencies(window_len);
    const std::size_t count = spectrogram_window_count(y.size(), window_len, r.hop);
    for (std::size_t w = 0; w < count; ++w) {
        r.starts.push_back(w * r.hop);
        r.centers.push_back(static_cast<double>(w * r.hop) + 0.5 * static_cast<double>(window_len - 1));
    }
    const std::size_t q = r.freqs.size();
    r.values.assign(count * q, 0.0);
    std::vector<std::size_t> nonconv(count, 0);
    parallel_for(count, threads, [&](std::size_t w) {
        const auto seg = y.subspan(r.starts[w], window_len);
        double first = seg.front();
        bool constant = true;
        for (double v : seg) constant = constant && v == first;
        std::vector<double> ord(q, 0.0);
        if (!constant) {
            const auto m = estimate(seg, est, cfg);
            ord = m.values;
            nonconv[w] = m.nonconverged.empty() ? 0 : m.nonconverged[0];
        }
        const auto lg = log_ordinates(ord);
        std::copy(lg.begin(), lg.end(), r.values.begin() + static_cast<std::ptrdiff_t>(w * q));
    });
    for (auto c : nonconv) r.nonconverged += c;
    return r;
}

inline SpectrogramResult ahp_spectrogram(std::span<const double> y, std::size_t window_len, std::size_t overlap,
                                         double alpha, const PsiSpec& psi, const SolverConfig& cfg = {},
                                         unsigned threads = 1) {
    return ahp_spectrogram(y, window_len, overlap, EstimatorSpec::ahp(alpha, psi), cfg, threads);
}

}  // namespace ahp
