#pragma once

/// Asymmetric Huber loss, its derivatives, and the sample asymmetric Huber
/// quantile (AHQ).
///
/// The loss is quadratic inside the band |u| <= psi and linear outside it,
/// weighted by alpha on positive residuals and 1 - alpha on negative ones:
///
///   rho(u) = w(u) * u^2 / 2               |u| <= psi
///   rho(u) = w(u) * psi * (|u| - psi / 2) |u| >  psi
///
/// with w(u) = |alpha - I(u < 0)|.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace ahp {

enum class PsiMode {
    Absolute,     // psi is in data units
    StdMultiple,  // psi is a multiplier of the sample standard deviation
};

/// Sample standard deviation with the n - 1 denominator (two-pass).
inline double sample_std(std::span<const double> y) {
    if (y.size() < 2) return 0.0;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(y.size() - 1));
}

inline double sample_mean(std::span<const double> y) {
    if (y.empty()) throw std::domain_error("sample_mean: empty series");
    return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

/// The pair (alpha, psi). When the mode is StdMultiple, psi holds the
/// multiplier and must be resolved against a series before use with the
/// loss functions.
class AHParams {
public:
    AHParams(double alpha, double psi, PsiMode mode = PsiMode::Absolute)
        : alpha_(alpha), psi_(psi), mode_(mode) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("AHParams: alpha must lie in (0, 1), got " + std::to_string(alpha));
        if (!(psi > 0.0) || !std::isfinite(psi))
            throw std::domain_error("AHParams: psi must be positive and finite, got " + std::to_string(psi));
    }

    static AHParams absolute(double alpha, double psi) { return {alpha, psi, PsiMode::Absolute}; }
    static AHParams std_multiple(double alpha, double multiplier) {
        return {alpha, multiplier, PsiMode::StdMultiple};
    }

    double alpha() const noexcept { return alpha_; }
    double psi() const noexcept { return psi_; }
    PsiMode psi_mode() const noexcept { return mode_; }

    /// Absolute psi for the series y.
    double resolve_psi(std::span<const double> y) const {
        if (mode_ == PsiMode::Absolute) return psi_;
        const double psi = psi_ * sample_std(y);
        if (!(psi > 0.0))
            throw std::domain_error("AHParams: resolved psi is not positive (constant or too short series?)");
        return psi;
    }

    AHParams resolved(std::span<const double> y) const { return absolute(alpha_, resolve_psi(y)); }

private:
    double alpha_;
    double psi_;
    PsiMode mode_;
};

namespace detail {

// Unchecked kernel used in the inner loops. psi must already be absolute.
struct HuberKernel {
    double alpha;
    double psi;

    double weight(double u) const noexcept { return u < 0.0 ? 1.0 - alpha : alpha; }

    double rho(double u) const noexcept {
        const double a = std::abs(u);
        return a <= psi ? weight(u) * 0.5 * u * u : weight(u) * psi * (a - 0.5 * psi);
    }

    double rho_dot(double u) const noexcept {
        if (u > psi) return alpha * psi;
        if (u < -psi) return -(1.0 - alpha) * psi;
        return weight(u) * u;
    }

    // IRLS weight: w(u) * u == rho_dot(u).
    double irls_weight(double u) const noexcept {
        const double a = std::abs(u);
        return a <= psi ? weight(u) : weight(u) * psi / a;
    }
};

inline HuberKernel kernel_of(const AHParams& p) {
    if (p.psi_mode() != PsiMode::Absolute)
        throw std::invalid_argument("loss evaluated with an unresolved StdMultiple psi");
    return {p.alpha(), p.psi()};
}

inline void require_finite(double u, const char* who) {
    if (!std::isfinite(u)) throw std::domain_error(std::string(who) + ": non-finite argument");
}

}  // namespace detail

inline double rho(double u, const AHParams& p) {
    detail::require_finite(u, "rho");
    return detail::kernel_of(p).rho(u);
}

inline double rho_dot(double u, const AHParams& p) {
    detail::require_finite(u, "rho_dot");
    return detail::kernel_of(p).rho_dot(u);
}

/// Second derivative as a nonnegative weight: alpha on (0, psi), 1 - alpha on
/// (-psi, 0), 0 outside the band. The analytic value on (-psi, 0) is
/// alpha - 1; only its magnitude is used downstream. Kinks at -psi, 0, psi
/// return the right limit.
inline double rho_ddot(double u, const AHParams& p) {
    const auto k = detail::kernel_of(p);
    if (u < -k.psi) return 0.0;
    if (u < 0.0) return 1.0 - k.alpha;
    if (u < k.psi) return k.alpha;
    return 0.0;
}

/// Sum of rho_dot(y_t - mu); nonincreasing in mu.
inline double ahq_score(std::span<const double> y, double mu, const AHParams& p) {
    const auto k = detail::kernel_of(p);
    double s = 0.0;
    for (double v : y) s += k.rho_dot(v - mu);
    return s;
}

/// Empirical AHQ: the minimiser of sum_t rho(y_t - mu). Solved by bisection
/// on the monotone score sum_t rho_dot(y_t - mu) over [min(y), max(y)].
inline double sample_ahq(std::span<const double> y, const AHParams& p) {
    if (y.empty()) throw std::domain_error("sample_ahq: empty series");
    for (double v : y) detail::require_finite(v, "sample_ahq");
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (lo == hi) return lo;

    const auto k = detail::kernel_of(p);
    auto score = [&](double mu) {
        double s = 0.0;
        for (double v : y) s += k.rho_dot(v - mu);
        return s;
    };
    // score(lo) >= 0 >= score(hi)
    for (int it = 0; it < 200; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double s = score(mid);
        if (s > 0.0)
            lo = mid;
        else if (s < 0.0)
            hi = mid;
        else
            return mid;
    }
    // pick the endpoint with the smaller |score|
    return std::abs(score(lo)) <= std::abs(score(hi)) ? lo : hi;
}

/// Empirical objective sum_t rho(y_t - mu).
inline double ahq_objective(std::span<const double> y, double mu, const AHParams& p) {
    const auto k = detail::kernel_of(p);
    double s = 0.0;
    for (double v : y) s += k.rho(v - mu);
    return s;
}

}  // namespace ahp
