#pragma once

// Asymmetric Huber spectrum g = eta^2 h: the scaling factor eta, the rho_dot
// process whose ordinary spectrum is h, and three estimators of g (Monte
// Carlo averaged AHPs, eta^2 times the periodogram of the rho_dot process,
// and a truncated autocovariance sum).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahp/loss.hpp"
#include "ahp/parallel.hpp"
#include "ahp/periodogram.hpp"
#include "ahp/simgen.hpp"

namespace ahp {

enum class AhsMethod { MonteCarloAveraged, RhoDotPeriodogram, AcfTruncated };

inline std::string method_name(AhsMethod m) {
    switch (m) {
        case AhsMethod::MonteCarloAveraged: return "monte_carlo_averaged";
        case AhsMethod::RhoDotPeriodogram: return "rho_dot_periodogram";
        case AhsMethod::AcfTruncated: return "acf_truncated";
    }
    return "unknown";
}

struct AHSEstimate {
    std::vector<double> freqs;
    std::vector<double> alphas;
    std::vector<double> values;  // row-major freqs x alphas
    std::vector<double> eta;     // per alpha
    std::vector<double> mu_hat;  // per alpha
    AhsMethod method = AhsMethod::RhoDotPeriodogram;
    std::size_t n = 0;
    PsiSpec psi{};
    bool normalized = false;

    std::size_t rows() const noexcept { return freqs.size(); }
    std::size_t cols() const noexcept { return alphas.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * alphas.size() + j]; }
    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows());
        for (std::size_t i = 0; i < rows(); ++i) c[i] = at(i, j);
        return c;
    }
};

/// u_t = rho_dot(y_t - mu_hat) with mu_hat the sample AHQ.
inline std::vector<double> rho_dot_process(std::span<const double> y, const AHParams& p) {
    if (y.size() < 2) throw std::domain_error("rho_dot_process: series too short");
    const double first = y.front();
    bool constant = true;
    for (double v : y) constant = constant && v == first;
    if (constant) return std::vector<double>(y.size(), 0.0);
    const AHParams r = p.resolved(y);
    const double mu = sample_ahq(y, r);
    const auto k = detail::kernel_of(r);
    std::vector<double> out(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) out[t] = k.rho_dot(y[t] - mu);
    return out;
}

/// 1 / eta_hat = alpha * #{0 < y - mu < psi} / n + (1 - alpha) * #{-psi < y - mu < 0} / n.
inline double eta_inverse_hat(std::span<const double> y, const AHParams& p) {
    if (y.empty()) throw std::domain_error("eta_hat: empty series");
    const AHParams r = p.resolved(y);
    const double mu = sample_ahq(y, r);
    std::size_t above = 0, below = 0;
    for (double v : y) {
        const double u = v - mu;
        if (u > 0.0 && u < r.psi()) ++above;
        if (u < 0.0 && u > -r.psi()) ++below;
    }
    const double n = static_cast<double>(y.size());
    const double inv = r.alpha() * static_cast<double>(above) / n + (1.0 - r.alpha()) * static_cast<double>(below) / n;
    if (!(inv > 0.0))
        throw std::domain_error("eta_hat: empirical mass of the band |y - mu| < psi is zero; eta is undefined");
    return inv;
}

inline double eta_hat(std::span<const double> y, const AHParams& p) { return 1.0 / eta_inverse_hat(y, p); }

/// eta_hat^2 times the ordinary periodogram of the rho_dot process: the
/// fast approximation of the AHP.
inline AHSEstimate ahs_via_rho_dot(std::span<const double> y, const AHParams& p) {
    const double eta = eta_hat(y, p);
    const auto u = rho_dot_process(y, p);
    const auto pg = ordinary_pg(u);
    AHSEstimate e;
    e.freqs = pg.freqs;
    e.alphas = {p.alpha()};
    e.values = pg.values;
    for (double& v : e.values) v *= eta * eta;
    e.eta = {eta};
    e.mu_hat = {sample_ahq(y, p.resolved(y))};
    e.method = AhsMethod::RhoDotPeriodogram;
    e.n = y.size();
    e.psi = {p.psi_mode(), p.psi()};
    return e;
}

/// eta_hat^2 * sum_{|tau| <= L} gamma_hat(tau) cos(w tau), negative values
/// clipped to zero. L defaults to ceil(n^(1/3)).
inline AHSEstimate ahs_acf_truncated(std::span<const double> y, const AHParams& p, std::size_t max_lag = 0) {
    const std::size_t n = y.size();
    if (n < 8) throw std::domain_error("ahs_acf_truncated: series too short");
    if (max_lag == 0) max_lag = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
    if (max_lag >= n) throw std::domain_error("ahs_acf_truncated: lag window too wide");
    const double eta = eta_hat(y, p);
    auto u = rho_dot_process(y, p);
    const double mean = sample_mean(u);
    for (double& v : u) v -= mean;
    std::vector<double> gamma(max_lag + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double s = 0.0;
        for (std::size_t t = lag; t < n; ++t) s += u[t] * u[t - lag];
        gamma[lag] = s / static_cast<double>(n);
    }
    AHSEstimate e;
    e.freqs = fourier_frequencies(n);
    e.alphas = {p.alpha()};
    e.values.resize(e.freqs.size());
    for (std::size_t i = 0; i < e.freqs.size(); ++i) {
        double h = gamma[0];
        for (std::size_t lag = 1; lag <= max_lag; ++lag)
            h += 2.0 * gamma[lag] * std::cos(e.freqs[i] * static_cast<double>(lag));
        e.values[i] = std::max(0.0, eta * eta * h);
    }
    e.eta = {eta};
    e.mu_hat = {sample_ahq(y, p.resolved(y))};
    e.method = AhsMethod::AcfTruncated;
    e.n = n;
    e.psi = {p.psi_mode(), p.psi()};
    return e;
}

// ---------------------------------------------------------------------------
// Monte Carlo averaging

struct AveragingOptions {
    std::size_t reps = 200;
    bool normalize = true;       // per replicate, before smoothing
    std::size_t bandwidth = 0;   // 0: no smoothing
    SolverConfig solver{};
    unsigned threads = 1;
    bool compute_eta = false;  // mean eta_hat per AHP column
    std::optional<OutlierSpec> contamination;  // applied to every replicate
};

/// Replicate-averaged periodograms, one column per estimator. Replicate r
/// uses the series generate(model, derive_seed(model.seed, r)), contaminated
/// when requested (random t_star from derive_seed(model.seed, r, 100 + kind)).
/// Replicates are summed in fixed blocks with compensated sums and the blocks
/// combined in order, so the result does not depend on the thread count.
struct AveragedPeriodogram {
    std::vector<double> freqs;
    std::vector<std::string> labels;
    std::vector<EstimatorSpec> estimators;
    std::vector<double> values;  // row-major freqs x estimators
    std::vector<double> eta;     // mean eta_hat per estimator (NaN unless computed)
    std::vector<double> mu;      // mean centring constant per estimator
    std::size_t n = 0;
    std::size_t reps = 0;
    std::size_t nonconverged = 0;
    bool normalized = false;
    std::size_t bandwidth = 0;

    std::size_t rows() const noexcept { return freqs.size(); }
    std::size_t cols() const noexcept { return labels.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows());
        for (std::size_t i = 0; i < rows(); ++i) c[i] = at(i, j);
        return c;
    }
};

inline constexpr std::size_t kReplicateBlock = 8;

inline AveragedPeriodogram monte_carlo_average(const ModelSpec& model, std::span<const EstimatorSpec> estimators,
                                               const AveragingOptions& opt) {
    model.validate();
    if (estimators.empty()) throw std::domain_error("monte_carlo_average: no estimators");
    if (opt.reps == 0) throw std::domain_error("monte_carlo_average: reps must be >= 1");
    for (const auto& e : estimators) e.validate();
    const std::size_t q = fourier_count(model.n);
    if (opt.bandwidth != 0 && (opt.bandwidth < 3 || opt.bandwidth % 2 == 0 || opt.bandwidth > q))
        throw std::domain_error("monte_carlo_average: invalid smoothing bandwidth");

    const std::size_t cols = estimators.size();
    const std::size_t blocks = (opt.reps + kReplicateBlock - 1) / kReplicateBlock;

    struct Block {
        std::vector<CompensatedSum> values, eta, mu;
        std::size_t nonconverged = 0;
    };
    std::vector<Block> partial(blocks);

    parallel_for(blocks, opt.threads, [&](std::size_t b) {
        Block& blk = partial[b];
        blk.values.resize(q * cols);
        blk.eta.resize(cols);
        blk.mu.resize(cols);
        const std::size_t end = std::min(opt.reps, (b + 1) * kReplicateBlock);
        for (std::size_t r = b * kReplicateBlock; r < end; ++r) {
            auto y = generate(model, derive_seed(model.seed, r));
            if (opt.contamination) {
                OutlierSpec o = *opt.contamination;
                if (!o.t_star) o.seed = derive_seed(model.seed, r, 100 + static_cast<std::uint64_t>(o.kind));
                y = inject_outliers(y, o);
            }
            for (std::size_t j = 0; j < cols; ++j) {
                PeriodogramMatrix m = estimate(y, estimators[j], opt.solver);
                blk.nonconverged += m.nonconverged.empty() ? 0 : m.nonconverged[0];
                if (opt.normalize) m = normalize(std::move(m));
                if (opt.bandwidth) m = smooth(std::move(m), opt.bandwidth);
                for (std::size_t i = 0; i < q; ++i) blk.values[i * cols + j].add(m.values[i]);
                blk.mu[j].add(m.mu[0]);
                if (opt.compute_eta && estimators[j].kind != EstimatorKind::Pg) {
                    const double a = estimators[j].effective_alpha();
                    const PsiSpec ps = estimators[j].effective_psi();
                    blk.eta[j].add(eta_hat(y, AHParams(a, ps.value > 0 ? ps.value : kSmallPsiMultiple, ps.mode)));
                }
            }
        }
    });

    AveragedPeriodogram out;
    out.freqs = fourier_frequencies(model.n);
    out.estimators.assign(estimators.begin(), estimators.end());
    for (const auto& e : estimators) out.labels.push_back(label(e));
    out.n = model.n;
    out.reps = opt.reps;
    out.normalized = opt.normalize;
    out.bandwidth = opt.bandwidth;
    out.values.assign(q * cols, 0.0);
    out.eta.assign(cols, 0.0);
    out.mu.assign(cols, 0.0);
    const double inv = 1.0 / static_cast<double>(opt.reps);
    for (std::size_t idx = 0; idx < q * cols; ++idx) {
        CompensatedSum s;
        for (const auto& blk : partial) s.add(blk.values[idx].value());
        out.values[idx] = s.value() * inv;
    }
    for (std::size_t j = 0; j < cols; ++j) {
        CompensatedSum se, sm;
        for (const auto& blk : partial) {
            se.add(blk.eta[j].value());
            sm.add(blk.mu[j].value());
        }
        out.eta[j] = opt.compute_eta && estimators[j].kind != EstimatorKind::Pg ? se.value() * inv : std::nan("");
        out.mu[j] = sm.value() * inv;
    }
    for (const auto& blk : partial) out.nonconverged += blk.nonconverged;
    return out;
}

/// Monte Carlo AHS of a GARCH(1,1) model: the average of `reps` (normalised,
/// smoothed) AHPs over the alpha grid. bandwidth 0 selects the default.
inline AHSEstimate ahs_theoretical_garch(const GarchParams& g, std::span<const double> alphas, const PsiSpec& psi,
                                         std::size_t reps, std::size_t n, std::uint64_t seed,
                                         AveragingOptions opt = {}) {
    g.validate();
    if (alphas.empty()) throw std::domain_error("ahs_theoretical_garch: empty alpha grid");
    ModelSpec model;
    model.params = g;
    model.n = n;
    model.seed = seed;
    std::vector<EstimatorSpec> est;
    for (double a : alphas) est.push_back(EstimatorSpec::ahp(a, psi));
    opt.reps = reps;
    opt.compute_eta = true;
    if (opt.bandwidth == 0) opt.bandwidth = default_bandwidth(n);
    const auto avg = monte_carlo_average(model, est, opt);

    AHSEstimate e;
    e.freqs = avg.freqs;
    e.alphas.assign(alphas.begin(), alphas.end());
    e.values = avg.values;
    e.eta = avg.eta;
    e.mu_hat = avg.mu;
    e.method = AhsMethod::MonteCarloAveraged;
    e.n = n;
    e.psi = psi;
    e.normalized = opt.normalize;
    return e;
}

}  // namespace ahp
