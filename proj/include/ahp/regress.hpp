#pragma once

// Trigonometric asymmetric Huber regression at a single Fourier frequency.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahp/loss.hpp"

namespace ahp {

/// Fourier frequencies 2*pi*k/n, k = 1 .. ceil(n/2) - 1, all in (0, pi).
inline std::vector<double> fourier_frequencies(std::size_t n) {
    if (n < 4) throw std::domain_error("fourier_frequencies: n must be >= 4");
    const std::size_t kmax = (n + 1) / 2 - 1;
    std::vector<double> out;
    out.reserve(kmax);
    for (std::size_t k = 1; k <= kmax; ++k)
        out.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    return out;
}

inline std::size_t fourier_count(std::size_t n) { return n < 4 ? 0 : (n + 1) / 2 - 1; }

/// Index k with omega == 2*pi*k/n; throws if omega is not a Fourier frequency
/// in (0, pi).
inline std::size_t fourier_index(double omega, std::size_t n) {
    const double kf = omega * static_cast<double>(n) / (2.0 * std::numbers::pi);
    const double kr = std::round(kf);
    if (kr < 1.0 || kr > static_cast<double>(fourier_count(n)) || std::abs(kf - kr) > 1e-9 * (1.0 + kr))
        throw std::domain_error("omega is not a Fourier frequency in (0, pi) for n = " + std::to_string(n));
    return static_cast<std::size_t>(kr);
}

struct SolverConfig {
    double tolerance = 1e-8;                // on ||delta beta|| / sd(y)
    std::optional<double> grad_tolerance;  // default 1e-6 * n * min(psi, sd(y))
    int max_iter = 200;
    double weight_floor = 1e-10;
    int max_halvings = 30;
    bool include_intercept = false;
    bool record_trace = false;

    void validate() const {
        if (!(tolerance > 0.0)) throw std::domain_error("SolverConfig: tolerance must be positive");
        if (grad_tolerance && !(*grad_tolerance > 0.0))
            throw std::domain_error("SolverConfig: grad_tolerance must be positive");
        if (max_iter <= 0) throw std::domain_error("SolverConfig: max_iter must be positive");
        if (!(weight_floor > 0.0)) throw std::domain_error("SolverConfig: weight_floor must be positive");
        if (max_halvings <= 0) throw std::domain_error("SolverConfig: max_halvings must be positive");
    }
};

struct RegressionFit {
    double beta1 = 0.0;  // cosine coefficient
    double beta2 = 0.0;  // sine coefficient
    double mu = 0.0;
    double omega = 0.0;
    double intercept = 0.0;  // only nonzero with include_intercept
    int iterations = 0;
    bool converged = false;
    double final_step = 0.0;
    double grad_norm = 0.0;
    double objective = 0.0;
    std::vector<double> objective_trace;  // accepted objectives, when requested
};

/// cos/sin of 2*pi*m/n for m = 0 .. n-1. Regressors at Fourier index k and
/// time t (1-based) are looked up at m = k*t mod n.
class TrigBasis {
public:
    explicit TrigBasis(std::size_t n) : n_(n), cos_(n), sin_(n) {
        for (std::size_t m = 0; m < n; ++m) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
            cos_[m] = std::cos(a);
            sin_[m] = std::sin(a);
        }
    }
    std::size_t size() const noexcept { return n_; }
    double cos_at(std::size_t k, std::size_t t) const noexcept { return cos_[(k * t) % n_]; }
    double sin_at(std::size_t k, std::size_t t) const noexcept { return sin_[(k * t) % n_]; }

private:
    std::size_t n_;
    std::vector<double> cos_, sin_;
};

namespace detail {

template <std::size_t P>
using Vec = std::array<double, P>;
template <std::size_t P>
using Mat = std::array<std::array<double, P>, P>;

// Solves A x = b for symmetric A by Gaussian elimination with partial
// pivoting. Returns false when A is numerically singular.
template <std::size_t P>
bool solve_small(Mat<P> a, Vec<P> b, Vec<P>& x) {
    double scale = 0.0;
    for (std::size_t i = 0; i < P; ++i) scale = std::max(scale, std::abs(a[i][i]));
    if (!(scale > 0.0)) return false;
    for (std::size_t c = 0; c < P; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < P; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) <= 1e-14 * scale) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < P; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j < P; ++j) a[r][j] -= f * a[c][j];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t i = P; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < P; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return true;
}

template <std::size_t P>
struct Evaluation {
    double objective = 0.0;
    Mat<P> normal{};  // sum w x x'
    Vec<P> rhs{};     // sum w x r
    Vec<P> grad{};    // sum rho_dot(u) x
};

}  // namespace detail

/// A series prepared for per-frequency fitting: resolved psi, the centring
/// constant mu (sample AHQ) and the trigonometric tables. Fits at different
/// frequencies share this state and are independent of each other.
class AhrProblem {
public:
    AhrProblem(std::span<const double> y, const AHParams& p)
        : y_(y.begin(), y.end()),
          kernel_{p.alpha(), p.resolve_psi(y)},
          basis_(y.size()) {
        if (y_.size() < 4) throw std::domain_error("AhrProblem: series too short");
        for (double v : y_) detail::require_finite(v, "AhrProblem");
        const AHParams resolved = AHParams::absolute(kernel_.alpha, kernel_.psi);
        mu_ = sample_ahq(y_, resolved);
        sd_ = sample_std(y_);
    }

    /// Uses a caller-supplied centring constant instead of the sample AHQ.
    AhrProblem(std::span<const double> y, const AHParams& p, double mu) : AhrProblem(y, p) { mu_ = mu; }

    std::size_t size() const noexcept { return y_.size(); }
    double mu() const noexcept { return mu_; }
    double psi() const noexcept { return kernel_.psi; }
    double alpha() const noexcept { return kernel_.alpha; }
    double scale() const noexcept { return sd_; }

    RegressionFit fit(double omega, const SolverConfig& cfg = {}) const {
        return fit_index(fourier_index(omega, y_.size()), cfg);
    }

    RegressionFit fit_index(std::size_t k, const SolverConfig& cfg = {}) const {
        cfg.validate();
        if (k < 1 || k > fourier_count(y_.size())) throw std::domain_error("fit_index: bad Fourier index");
        RegressionFit fit = cfg.include_intercept ? run<3>(k, cfg) : run<2>(k, cfg);
        fit.omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(y_.size());
        fit.mu = mu_;
        return fit;
    }

    /// sum_t rho(y_t - mu - intercept - beta1 cos(wt) - beta2 sin(wt))
    double objective(std::size_t k, double beta1, double beta2, double intercept = 0.0) const {
        double s = 0.0;
        for (std::size_t t = 1; t <= y_.size(); ++t) {
            const double u = y_[t - 1] - mu_ - intercept - beta1 * basis_.cos_at(k, t) - beta2 * basis_.sin_at(k, t);
            s += kernel_.rho(u);
        }
        return s;
    }

    /// Norm of sum_t rho_dot(u_t) x_t for the two trigonometric regressors.
    double gradient_norm(std::size_t k, double beta1, double beta2, double intercept = 0.0) const {
        double g1 = 0.0, g2 = 0.0;
        for (std::size_t t = 1; t <= y_.size(); ++t) {
            const double c = basis_.cos_at(k, t), s = basis_.sin_at(k, t);
            const double u = y_[t - 1] - mu_ - intercept - beta1 * c - beta2 * s;
            const double d = kernel_.rho_dot(u);
            g1 += d * c;
            g2 += d * s;
        }
        return std::hypot(g1, g2);
    }

private:
    template <std::size_t P>
    detail::Vec<P> regressor(std::size_t k, std::size_t t) const noexcept {
        if constexpr (P == 2) {
            return {basis_.cos_at(k, t), basis_.sin_at(k, t)};
        } else {
            return {basis_.cos_at(k, t), basis_.sin_at(k, t), 1.0};
        }
    }

    template <std::size_t P>
    detail::Evaluation<P> evaluate(std::size_t k, const detail::Vec<P>& beta, double floor) const {
        detail::Evaluation<P> e;
        for (std::size_t t = 1; t <= y_.size(); ++t) {
            const auto x = regressor<P>(k, t);
            const double r = y_[t - 1] - mu_;
            double fitted = 0.0;
            for (std::size_t i = 0; i < P; ++i) fitted += x[i] * beta[i];
            const double u = r - fitted;
            e.objective += kernel_.rho(u);
            const double w_raw = kernel_.irls_weight(u);
            const double w = std::max(w_raw, floor);
            const double d = w_raw * u;
            for (std::size_t i = 0; i < P; ++i) {
                e.rhs[i] += w * x[i] * r;
                e.grad[i] += d * x[i];
                for (std::size_t j = 0; j <= i; ++j) e.normal[i][j] += w * x[i] * x[j];
            }
        }
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = i + 1; j < P; ++j) e.normal[i][j] = e.normal[j][i];
        return e;
    }

    template <std::size_t P>
    static double norm(const detail::Vec<P>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }

    template <std::size_t P>
    RegressionFit run(std::size_t k, const SolverConfig& cfg) const {
        const double n = static_cast<double>(y_.size());
        const double step_scale = sd_ > 0.0 ? sd_ : 1.0;
        const double grad_tol = cfg.grad_tolerance.value_or(1e-6 * n * std::min(kernel_.psi, sd_));

        // least-squares start
        detail::Vec<P> beta{};
        {
            detail::Mat<P> xtx{};
            detail::Vec<P> xty{};
            for (std::size_t t = 1; t <= y_.size(); ++t) {
                const auto x = regressor<P>(k, t);
                for (std::size_t i = 0; i < P; ++i) {
                    xty[i] += x[i] * (y_[t - 1] - mu_);
                    for (std::size_t j = 0; j < P; ++j) xtx[i][j] += x[i] * x[j];
                }
            }
            detail::solve_small<P>(xtx, xty, beta);
        }

        RegressionFit fit;
        auto current = evaluate<P>(k, beta, cfg.weight_floor);
        if (cfg.record_trace) fit.objective_trace.push_back(current.objective);

        bool stalled = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            detail::Vec<P> proposal{};
            if (!detail::solve_small<P>(current.normal, current.rhs, proposal)) {
                stalled = true;
                break;
            }
            detail::Vec<P> delta{};
            for (std::size_t i = 0; i < P; ++i) delta[i] = proposal[i] - beta[i];

            double s = 1.0;
            bool accepted = false;
            detail::Evaluation<P> next;
            detail::Vec<P> candidate{};
            for (int h = 0; h <= cfg.max_halvings; ++h) {
                for (std::size_t i = 0; i < P; ++i) candidate[i] = beta[i] + s * delta[i];
                next = evaluate<P>(k, candidate, cfg.weight_floor);
                if (next.objective <= current.objective) {
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) {
                stalled = true;
                break;
            }
            detail::Vec<P> taken{};
            for (std::size_t i = 0; i < P; ++i) taken[i] = s * delta[i];
            beta = candidate;
            current = next;
            fit.iterations = it + 1;
            fit.final_step = norm<P>(taken) / step_scale;
            if (cfg.record_trace) fit.objective_trace.push_back(current.objective);
            if (fit.final_step <= cfg.tolerance && norm<P>(current.grad) <= grad_tol) {
                fit.converged = true;
                break;
            }
        }
        fit.grad_norm = norm<P>(current.grad);
        if (stalled) {
            fit.final_step = 0.0;
            fit.converged = fit.grad_norm <= grad_tol;
        }
        fit.beta1 = beta[0];
        fit.beta2 = beta[1];
        if constexpr (P == 3) fit.intercept = beta[2];
        fit.objective = current.objective;
        return fit;
    }

    std::vector<double> y_;
    detail::HuberKernel kernel_;
    TrigBasis basis_;
    double mu_ = 0.0;
    double sd_ = 0.0;
};

/// Fits one frequency. For a sweep over frequencies build an AhrProblem once
/// so mu is shared.
inline RegressionFit fit_ahr(std::span<const double> y, double omega, const AHParams& p,
                             const SolverConfig& cfg = {}) {
    return AhrProblem(y, p).fit(omega, cfg);
}

}  // namespace ahp
