#pragma once

// Asymmetric Huber periodogram: per-frequency fits assembled into ordinates
// over a Fourier grid and an alpha grid, plus the ordinary periodogram,
// normalisation and Daniell smoothing.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahp/fft.hpp"
#include "ahp/loss.hpp"
#include "ahp/parallel.hpp"
#include "ahp/regress.hpp"

namespace ahp {

inline constexpr double kHuberPsiMultiple = 1.345;
inline constexpr double kPsiPresets[] = {0.674, 0.935, 1.345};
inline constexpr double kLargePsiMultiple = 1e6;  // psi -> infinity surrogate
inline constexpr double kSmallPsiMultiple = 1e-6;  // psi -> 0 surrogate

/// How psi is given for a series: absolute, or as a multiple of the sample
/// standard deviation. A zero value requests the quantile limit and is mapped
/// to kSmallPsiMultiple * sd.
struct PsiSpec {
    PsiMode mode = PsiMode::StdMultiple;
    double value = kHuberPsiMultiple;

    static PsiSpec absolute(double psi) { return {PsiMode::Absolute, psi}; }
    static PsiSpec std_multiple(double m) { return {PsiMode::StdMultiple, m}; }
};

/// 0.05, 0.07, ..., 0.95
inline std::vector<double> default_alpha_grid() {
    std::vector<double> a;
    for (int i = 0; i <= 45; ++i) a.push_back(std::round((0.05 + 0.02 * i) * 1e6) / 1e6);
    return a;
}

struct PeriodogramMatrix {
    std::vector<double> freqs;   // angular, (0, pi)
    std::vector<double> alphas;
    double psi_resolved = 0.0;   // +inf for the ordinary periodogram
    std::vector<double> values;  // row-major, freqs.size() x alphas.size()
    bool normalized = false;
    std::size_t n = 0;
    std::vector<double> mu;                // per alpha
    std::vector<std::size_t> nonconverged;  // per alpha
    std::vector<std::string> warnings;

    std::size_t rows() const noexcept { return freqs.size(); }
    std::size_t cols() const noexcept { return alphas.size(); }
    double& at(std::size_t i, std::size_t j) { return values[i * alphas.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * alphas.size() + j]; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows());
        for (std::size_t i = 0; i < rows(); ++i) c[i] = at(i, j);
        return c;
    }

    double nonconverged_fraction() const {
        const std::size_t total = rows() * cols();
        if (total == 0) return 0.0;
        return static_cast<double>(std::accumulate(nonconverged.begin(), nonconverged.end(), std::size_t{0})) /
               static_cast<double>(total);
    }
};

/// AHDFT: (n/2) (beta1 - i beta2).
inline std::complex<double> ahdft(const RegressionFit& fit, std::size_t n) {
    const double h = 0.5 * static_cast<double>(n);
    return {h * fit.beta1, -h * fit.beta2};
}

/// |AHDFT|^2 / n = (n/4) (beta1^2 + beta2^2).
inline double ahp_ordinate(const RegressionFit& fit, std::size_t n) {
    return 0.25 * static_cast<double>(n) * (fit.beta1 * fit.beta1 + fit.beta2 * fit.beta2);
}

namespace detail {

inline double resolve_psi_spec(std::span<const double> y, const PsiSpec& spec, std::vector<std::string>* warnings) {
    if (!(spec.value >= 0.0) || !std::isfinite(spec.value)) throw std::domain_error("psi must be nonnegative and finite");
    double value = spec.value;
    PsiMode mode = spec.mode;
    if (value == 0.0) {
        if (warnings)
            warnings->push_back("psi = 0 approximated by psi = 1e-6 * sd (quantile periodogram surrogate)");
        value = kSmallPsiMultiple;
        mode = PsiMode::StdMultiple;
    }
    const double psi = mode == PsiMode::Absolute ? value : value * sample_std(y);
    if (!(psi > 0.0)) throw std::domain_error("resolved psi is not positive (degenerate series)");
    return psi;
}

}  // namespace detail

/// AHP over the Fourier frequencies of y and the given alphas. Tasks are
/// (frequency, alpha) pairs; the result is independent of `threads`.
inline PeriodogramMatrix compute_ahp(std::span<const double> y, std::span<const double> alphas, const PsiSpec& psi,
                                     const SolverConfig& cfg = {}, unsigned threads = 1) {
    if (y.size() < 8) throw std::domain_error("compute_ahp: series length must be >= 8");
    if (alphas.empty()) throw std::domain_error("compute_ahp: empty alpha grid");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw std::domain_error("compute_ahp: alpha outside (0, 1)");
    cfg.validate();

    PeriodogramMatrix m;
    m.n = y.size();
    m.freqs = fourier_frequencies(y.size());
    m.alphas.assign(alphas.begin(), alphas.end());
    m.psi_resolved = detail::resolve_psi_spec(y, psi, &m.warnings);
    m.values.assign(m.rows() * m.cols(), 0.0);
    m.mu.assign(m.cols(), 0.0);
    m.nonconverged.assign(m.cols(), 0);

    std::vector<AhrProblem> problems;
    problems.reserve(m.cols());
    for (double a : alphas) problems.emplace_back(y, AHParams::absolute(a, m.psi_resolved));
    for (std::size_t j = 0; j < m.cols(); ++j) m.mu[j] = problems[j].mu();

    std::vector<char> ok(m.rows() * m.cols(), 1);
    const std::size_t cols = m.cols();
    parallel_for(m.rows() * cols, threads, [&](std::size_t task) {
        const std::size_t i = task / cols, j = task % cols;
        const RegressionFit fit = problems[j].fit_index(i + 1, cfg);
        m.values[task] = ahp_ordinate(fit, m.n);
        ok[task] = fit.converged ? 1 : 0;
    });
    for (std::size_t task = 0; task < ok.size(); ++task)
        if (!ok[task]) ++m.nonconverged[task % cols];
    return m;
}

/// Ordinary periodogram of the mean-centred series.
inline PeriodogramMatrix ordinary_pg(std::span<const double> y) {
    if (y.size() < 8) throw std::domain_error("ordinary_pg: series length must be >= 8");
    const double mean = sample_mean(y);
    std::vector<double> centred(y.begin(), y.end());
    for (double& v : centred) v -= mean;
    PeriodogramMatrix m;
    m.n = y.size();
    m.freqs = fourier_frequencies(y.size());
    m.alphas = {0.5};
    m.psi_resolved = std::numeric_limits<double>::infinity();
    m.values = raw_periodogram(centred);
    m.mu = {mean};
    m.nonconverged = {0};
    return m;
}

/// Scales each column to sum to one.
inline PeriodogramMatrix normalize(PeriodogramMatrix m) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        CompensatedSum s;
        for (std::size_t i = 0; i < m.rows(); ++i) s.add(m.at(i, j));
        const double total = s.value();
        if (!(total > 0.0)) throw std::domain_error("normalize: column has zero sum (degenerate series)");
        for (std::size_t i = 0; i < m.rows(); ++i) m.at(i, j) /= total;
    }
    m.normalized = true;
    return m;
}

/// ceil(n / 40), rounded up to odd, at least 3.
inline std::size_t default_bandwidth(std::size_t n) {
    std::size_t bw = (n + 39) / 40;
    if (bw % 2 == 0) ++bw;
    return std::max<std::size_t>(bw, 3);
}

/// Daniell (moving average) smoothing of one sequence, with half-sample
/// symmetric reflection at both ends (x[-1] = x[0]). The smoothing matrix is
/// doubly stochastic, so the total mass is preserved.
inline std::vector<double> daniell_smooth(std::span<const double> x, std::size_t bandwidth) {
    const std::size_t len = x.size();
    if (bandwidth < 3 || bandwidth % 2 == 0 || bandwidth > len)
        throw std::domain_error("smooth: bandwidth must be odd, >= 3 and <= the number of frequencies");
    const long h = static_cast<long>(bandwidth / 2);
    const long L = static_cast<long>(len);
    auto reflect = [L](long i) {
        if (i < 0) return -i - 1;
        if (i >= L) return 2 * L - i - 1;
        return i;
    };
    std::vector<double> out(len);
    for (long i = 0; i < L; ++i) {
        double s = 0.0;
        for (long d = -h; d <= h; ++d) s += x[static_cast<std::size_t>(reflect(i + d))];
        out[static_cast<std::size_t>(i)] = s / static_cast<double>(bandwidth);
    }
    return out;
}

inline PeriodogramMatrix smooth(PeriodogramMatrix m, std::size_t bandwidth) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const auto col = daniell_smooth(m.column(j), bandwidth);
        for (std::size_t i = 0; i < m.rows(); ++i) m.at(i, j) = col[i];
    }
    return m;
}

// ---------------------------------------------------------------------------
// Named estimators

enum class EstimatorKind { Ahp, Pg, Ep, Hp, QpApprox };

/// One periodogram column. Ep, Hp and QpApprox are AHP special cases:
/// Ep is psi = 1e6 sd, Hp fixes alpha = 0.5, QpApprox is psi = 1e-6 sd.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Ahp;
    double alpha = 0.5;
    PsiSpec psi{};

    static EstimatorSpec ahp(double alpha, PsiSpec psi) { return {EstimatorKind::Ahp, alpha, psi}; }
    static EstimatorSpec pg() { return {EstimatorKind::Pg, 0.5, PsiSpec::std_multiple(kLargePsiMultiple)}; }
    static EstimatorSpec ep(double alpha) {
        return {EstimatorKind::Ep, alpha, PsiSpec::std_multiple(kLargePsiMultiple)};
    }
    static EstimatorSpec hp(PsiSpec psi) { return {EstimatorKind::Hp, 0.5, psi}; }
    static EstimatorSpec qp_approx(double alpha) {
        return {EstimatorKind::QpApprox, alpha, PsiSpec::std_multiple(kSmallPsiMultiple)};
    }

    /// alpha and psi actually used by the AHP route.
    double effective_alpha() const { return kind == EstimatorKind::Hp || kind == EstimatorKind::Pg ? 0.5 : alpha; }
    PsiSpec effective_psi() const {
        switch (kind) {
            case EstimatorKind::Pg:
            case EstimatorKind::Ep: return PsiSpec::std_multiple(kLargePsiMultiple);
            case EstimatorKind::QpApprox: return PsiSpec::std_multiple(kSmallPsiMultiple);
            default: return psi;
        }
    }

    void validate() const {
        const double a = effective_alpha();
        if (!(a > 0.0 && a < 1.0)) throw std::domain_error("estimator alpha outside (0, 1)");
        const PsiSpec p = effective_psi();
        if (!(p.value >= 0.0) || !std::isfinite(p.value)) throw std::domain_error("estimator psi must be >= 0");
    }
};

inline std::string format_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string psi_label(const PsiSpec& p) {
    return p.mode == PsiMode::StdMultiple ? format_short(p.value) + "sd" : format_short(p.value);
}

inline std::string label(const EstimatorSpec& e) {
    switch (e.kind) {
        case EstimatorKind::Pg: return "PG";
        case EstimatorKind::Ep: return "EP(alpha=" + format_short(e.alpha) + ")";
        case EstimatorKind::Hp: return "HP(psi=" + psi_label(e.psi) + ")";
        case EstimatorKind::QpApprox: return "QP~(alpha=" + format_short(e.alpha) + ")";
        case EstimatorKind::Ahp:
        default: return "AHP(alpha=" + format_short(e.alpha) + ",psi=" + psi_label(e.psi) + ")";
    }
}

/// Single-column periodogram for a named estimator. Pg takes the FFT path.
inline PeriodogramMatrix estimate(std::span<const double> y, const EstimatorSpec& e, const SolverConfig& cfg = {},
                                  unsigned threads = 1) {
    e.validate();
    if (e.kind == EstimatorKind::Pg) return ordinary_pg(y);
    const double a = e.effective_alpha();
    return compute_ahp(y, std::span<const double>(&a, 1), e.effective_psi(), cfg, threads);
}

}  // namespace ahp
