#pragma once

// Seeded generators for the synthetic models (AR(2), amplitude-modulated
// AR(2), nonlinear mixture, GARCH(1,1), white noise) and the three
// contamination types.
//
// Random numbers: std::mt19937_64 (fully specified by the standard), uniform
// variates from the top 53 bits, Gaussian variates by the Marsaglia polar
// method. No std::*_distribution is used, so a seed reproduces the same
// series with any conforming standard library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ahp/loss.hpp"

namespace ahp {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for (master, a, b).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ splitmix64(a + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ splitmix64(b + 0xd1b54a32d192ed03ULL));
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal (Marsaglia polar method).
    double normal() noexcept {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        return u * f;
    }

    /// Uniform integer in [lo, hi] by rejection.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        if (hi < lo) throw std::domain_error("uniform_int: empty range");
        const std::uint64_t span = hi - lo;
        if (span == ~std::uint64_t{0}) return engine_();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
        std::uint64_t r;
        do r = engine_();
        while (r >= limit);
        return lo + r % range;
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = sd * rng.normal();
    return out;
}

// ---------------------------------------------------------------------------
// AR(2)

/// Roots of 1 - phi1 z - phi2 z^2 strictly outside the unit circle.
inline bool ar2_stationary(double phi1, double phi2) noexcept {
    return phi2 > -1.0 && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0;
}

/// (phi1, phi2) = (2 r cos(2 pi f), -r^2): complex roots with modulus 1/r.
struct Ar2Params {
    double phi1 = 0.9;
    double phi2 = -0.9;

    static Ar2Params from_polar(double r, double f) {
        return {2.0 * r * std::cos(2.0 * std::numbers::pi * f), -r * r};
    }
};

inline constexpr std::size_t kDefaultBurnIn = 500;

inline std::vector<double> gen_ar2(double phi1, double phi2, std::size_t n, std::size_t burn_in,
                                   std::uint64_t seed) {
    if (!ar2_stationary(phi1, phi2))
        throw std::domain_error("gen_ar2: (phi1, phi2) is not stationary");
    Rng rng(seed);
    double x1 = 0.0, x2 = 0.0;  // x_{t-1}, x_{t-2}
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t t = 0; t < n + burn_in; ++t) {
        const double x = phi1 * x1 + phi2 * x2 + rng.normal();
        x2 = x1;
        x1 = x;
        if (t >= burn_in) out.push_back(x);
    }
    return out;
}

/// Angular frequency of the AR(2) spectral peak, arccos(phi1 / (2 sqrt(-phi2))).
inline double ar2_peak_frequency(double phi1, double phi2) {
    if (!(phi2 < 0.0)) throw std::domain_error("ar2_peak_frequency: requires phi2 < 0");
    const double c = phi1 / (2.0 * std::sqrt(-phi2));
    if (std::abs(c) > 1.0) throw std::domain_error("ar2_peak_frequency: no complex root pair");
    return std::acos(c);
}

// ---------------------------------------------------------------------------
// Hidden periodicities: y_t = (b0 + b1 cos(2 pi f0 t) + b2 sin(2 pi f1 t)) x_t

struct HiddenParams {
    Ar2Params base = Ar2Params::from_polar(0.6, 0.25);
    double b0 = 1.0;
    double b1 = 0.9;
    double b2 = 1.0;
    double f0 = 0.09;
    double f1 = 0.12;
};

inline double hidden_envelope(const HiddenParams& h, std::size_t t) {
    const double td = static_cast<double>(t);
    return h.b0 + h.b1 * std::cos(2.0 * std::numbers::pi * h.f0 * td) +
           h.b2 * std::sin(2.0 * std::numbers::pi * h.f1 * td);
}

inline std::vector<double> gen_hidden(const HiddenParams& h, std::size_t n, std::size_t burn_in,
                                      std::uint64_t seed) {
    auto y = gen_ar2(h.base.phi1, h.base.phi2, n, burn_in, seed);
    for (std::size_t t = 1; t <= n; ++t) y[t - 1] *= hidden_envelope(h, t);
    return y;
}

// ---------------------------------------------------------------------------
// Nonlinear mixture

inline double mixture_w1(double x) noexcept {
    if (x < -0.8) return 0.75;
    if (x > 0.8) return 0.1;
    return -13.0 / 32.0 * x + 0.425;
}

inline double mixture_w2(double x) noexcept {
    if (x < -0.4) return 0.5;
    if (x > 0.0) return 0.0;
    return -1.25 * x;
}

struct MixtureComponents {
    std::vector<double> x1, x2, x3, y;
};

/// Components: x1 = 0.8 x1(t-1) + w, x2 = -0.75 x2(t-1) + w,
/// x3 = -0.81 x3(t-2) + w, each on its own stream derived from seed.
/// y = W2(z) z + (1 - W2(z)) x3 with z = W1(x1) x1 + (1 - W1(x1)) x2,
/// W1 and W2 applied to the raw component values.
inline MixtureComponents gen_mixture_components(std::size_t n, std::size_t burn_in, std::uint64_t seed) {
    MixtureComponents c;
    c.x1 = gen_ar2(0.8, 0.0, n, burn_in, derive_seed(seed, 1));
    c.x2 = gen_ar2(-0.75, 0.0, n, burn_in, derive_seed(seed, 2));
    c.x3 = gen_ar2(0.0, -0.81, n, burn_in, derive_seed(seed, 3));
    c.y.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double w1 = mixture_w1(c.x1[t]);
        const double z = w1 * c.x1[t] + (1.0 - w1) * c.x2[t];
        const double w2 = mixture_w2(z);
        c.y[t] = w2 * z + (1.0 - w2) * c.x3[t];
    }
    return c;
}

inline std::vector<double> gen_mixture(std::size_t n, std::size_t burn_in, std::uint64_t seed) {
    if (n < 8) throw std::domain_error("gen_mixture: n must be >= 8");
    return gen_mixture_components(n, burn_in, seed).y;
}

// ---------------------------------------------------------------------------
// GARCH(1,1): y_t ~ N(0, s2_t), s2_t = omega0 + arch y_{t-1}^2 + garch s2_{t-1}

struct GarchParams {
    double omega0 = 1e-6;
    double arch = 0.49;
    double garch = 0.49;

    void validate() const {
        if (!(omega0 > 0.0)) throw std::domain_error("GARCH: omega0 must be positive");
        if (arch < 0.0 || garch < 0.0) throw std::domain_error("GARCH: coefficients must be nonnegative");
        if (!(arch + garch < 1.0)) throw std::domain_error("GARCH: arch + garch must be < 1 (stationarity)");
    }
};

inline double garch_variance_step(const GarchParams& g, double y_prev, double s2_prev) noexcept {
    return g.omega0 + g.arch * y_prev * y_prev + g.garch * s2_prev;
}

/// Starts from the stationary variance omega0 / (1 - arch - garch).
inline std::vector<double> gen_garch11(const GarchParams& g, std::size_t n, std::size_t burn_in,
                                       std::uint64_t seed) {
    g.validate();
    Rng rng(seed);
    double s2 = g.omega0 / (1.0 - g.arch - g.garch);
    std::vector<double> out;
    out.reserve(n);
    double y = 0.0;
    for (std::size_t t = 0; t < n + burn_in; ++t) {
        if (t > 0) s2 = garch_variance_step(g, y, s2);
        y = std::sqrt(s2) * rng.normal();
        if (t >= burn_in) out.push_back(y);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model specifications

struct WhiteNoiseParams {
    double sd = 1.0;
};

enum class ModelKind { Ar2, HiddenPeriodicity, Mixture, Garch11, WhiteNoise };

struct MixtureParams {};

struct ModelSpec {
    std::variant<Ar2Params, HiddenParams, MixtureParams, GarchParams, WhiteNoiseParams> params = Ar2Params{};
    std::size_t n = 200;
    std::size_t burn_in = kDefaultBurnIn;
    std::uint64_t seed = 0;

    ModelKind kind() const noexcept { return static_cast<ModelKind>(params.index()); }

    void validate() const {
        if (n < 8) throw std::domain_error("ModelSpec: n must be >= 8");
        std::visit(
            [](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Ar2Params>) {
                    if (!ar2_stationary(p.phi1, p.phi2)) throw std::domain_error("ModelSpec: AR(2) not stationary");
                } else if constexpr (std::is_same_v<T, HiddenParams>) {
                    if (!ar2_stationary(p.base.phi1, p.base.phi2))
                        throw std::domain_error("ModelSpec: AR(2) base not stationary");
                } else if constexpr (std::is_same_v<T, GarchParams>) {
                    p.validate();
                } else if constexpr (std::is_same_v<T, WhiteNoiseParams>) {
                    if (!(p.sd > 0.0)) throw std::domain_error("ModelSpec: white noise sd must be positive");
                }
            },
            params);
    }
};

inline std::string model_name(ModelKind k) {
    switch (k) {
        case ModelKind::Ar2: return "ar2";
        case ModelKind::HiddenPeriodicity: return "hidden";
        case ModelKind::Mixture: return "mixture";
        case ModelKind::Garch11: return "garch11";
        case ModelKind::WhiteNoise: return "white_noise";
    }
    return "unknown";
}

/// Series for the spec with an explicit seed (the spec's own seed is ignored).
inline std::vector<double> generate(const ModelSpec& m, std::uint64_t seed) {
    m.validate();
    return std::visit(
        [&](const auto& p) -> std::vector<double> {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Ar2Params>) {
                return gen_ar2(p.phi1, p.phi2, m.n, m.burn_in, seed);
            } else if constexpr (std::is_same_v<T, HiddenParams>) {
                return gen_hidden(p, m.n, m.burn_in, seed);
            } else if constexpr (std::is_same_v<T, MixtureParams>) {
                return gen_mixture(m.n, m.burn_in, seed);
            } else if constexpr (std::is_same_v<T, GarchParams>) {
                return gen_garch11(p, m.n, m.burn_in, seed);
            } else {
                return gaussian_noise(m.n, seed, p.sd);
            }
        },
        m.params);
}

inline std::vector<double> generate(const ModelSpec& m) { return generate(m, m.seed); }

// ---------------------------------------------------------------------------
// Contamination

enum class OutlierKind { SinglePoint, Burst, Eyeblink };

inline std::size_t outlier_extent(OutlierKind k) noexcept {
    switch (k) {
        case OutlierKind::SinglePoint: return 0;
        case OutlierKind::Burst: return 5;
        case OutlierKind::Eyeblink: return 50;
    }
    return 0;
}

/// t_star is a 1-based time index; nullopt draws it uniformly from the legal
/// range [1, n - extent] using `seed`.
struct OutlierSpec {
    OutlierKind kind = OutlierKind::SinglePoint;
    double c = 30.0;  // multiple of the input's sample standard deviation
    std::optional<std::size_t> t_star;
    std::uint64_t seed = 0;
};

/// Eyeblink shape for offsets s = 0..50, scaled so that the closure peak is
/// +amplitude and the reopening trough is -0.6 * amplitude.
///
/// Two gamma-density lobes evaluated at u = s + 1: closure u^2 e^{-u/4}
/// (shape 3, scale 4) and reopening v^3 e^{-v/5} with v = u - 12 (shape 4,
/// scale 5, delay 12). Each lobe is normalised to unit peak and their
/// difference is formed; the positive part of that difference is rescaled to
/// peak +amplitude and the negative part to trough -0.6 * amplitude.
inline std::vector<double> eyeblink_waveform(double amplitude) {
    constexpr std::size_t len = 51;
    auto closure = [](double u) { return u * u * std::exp(-u / 4.0); };
    auto reopen = [](double v) { return v > 0.0 ? v * v * v * std::exp(-v / 5.0) : 0.0; };
    const double closure_peak = closure(8.0);   // mode (3-1)*4
    const double reopen_peak = reopen(15.0);    // mode (4-1)*5
    std::vector<double> raw(len);
    double hi = 0.0, lo = 0.0;
    for (std::size_t s = 0; s < len; ++s) {
        const double u = static_cast<double>(s) + 1.0;
        raw[s] = closure(u) / closure_peak - reopen(u - 12.0) / reopen_peak;
        hi = std::max(hi, raw[s]);
        lo = std::min(lo, raw[s]);
    }
    for (double& r : raw) r = r > 0.0 ? amplitude * r / hi : 0.6 * amplitude * r / -lo;
    return raw;
}

/// 1-based t_star actually used for a series of length n.
inline std::size_t resolve_t_star(const OutlierSpec& spec, std::size_t n) {
    const std::size_t extent = outlier_extent(spec.kind);
    if (n < extent + 1) throw std::domain_error("inject_outliers: series too short for this contamination");
    const std::size_t last = n - extent;
    if (spec.t_star) {
        if (*spec.t_star < 1 || *spec.t_star > last)
            throw std::domain_error("inject_outliers: t_star " + std::to_string(*spec.t_star) + " outside [1, " +
                                    std::to_string(last) + "]");
        return *spec.t_star;
    }
    Rng rng(spec.seed);
    return static_cast<std::size_t>(rng.uniform_int(1, last));
}

/// Contaminated copy of y. Magnitudes are c times the sample standard
/// deviation of the input.
inline std::vector<double> inject_outliers(std::span<const double> y, const OutlierSpec& spec) {
    if (!(spec.c > 0.0)) throw std::domain_error("inject_outliers: c must be positive");
    const std::size_t t0 = resolve_t_star(spec, y.size()) - 1;
    const double amp = spec.c * sample_std(y);
    std::vector<double> out(y.begin(), y.end());
    switch (spec.kind) {
        case OutlierKind::SinglePoint: out[t0] += amp; break;
        case OutlierKind::Burst:
            for (std::size_t i = 0; i <= 5; ++i) out[t0 + i] += amp;
            break;
        case OutlierKind::Eyeblink: {
            const auto w = eyeblink_waveform(amp);
            for (std::size_t i = 0; i < w.size(); ++i) out[t0 + i] += w[i];
            break;
        }
    }
    return out;
}

}  // namespace ahp
