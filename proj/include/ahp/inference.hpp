#pragma once

// Fisher's g test for a periodic component, applied to any periodogram
// column, and a Monte Carlo power study harness.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahp/parallel.hpp"
#include "ahp/periodogram.hpp"
#include "ahp/simgen.hpp"

namespace ahp {

struct FisherStatistic {
    double g = 0.0;
    std::size_t argmax = 0;
};

/// g = max / sum. Ties resolve to the smallest index.
inline FisherStatistic fisher_statistic(std::span<const double> ordinates) {
    if (ordinates.empty()) throw std::domain_error("fisher_statistic: no ordinates");
    CompensatedSum total;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < ordinates.size(); ++i) {
        if (!(ordinates[i] >= 0.0)) throw std::domain_error("fisher_statistic: ordinates must be nonnegative");
        total.add(ordinates[i]);
        if (ordinates[i] > ordinates[arg]) arg = i;
    }
    if (!(total.value() > 0.0)) throw std::domain_error("fisher_statistic: all ordinates are zero");
    return {std::min(1.0, ordinates[arg] / total.value()), arg};
}

namespace detail {

class Mpfr {
public:
    explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
    ~Mpfr() { mpfr_clear(v_); }
    Mpfr(const Mpfr&) = delete;
    Mpfr& operator=(const Mpfr&) = delete;
    mpfr_ptr get() noexcept { return v_; }

private:
    mpfr_t v_;
};

inline double log_binomial(std::size_t q, std::size_t j) {
    return std::lgamma(static_cast<double>(q) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
           std::lgamma(static_cast<double>(q - j) + 1.0);
}

}  // namespace detail

/// P(G > g) for Fisher's statistic over q i.i.d. exponential ordinates:
///   sum_{j=1}^{floor(1/g)} (-1)^{j-1} C(q, j) (1 - j g)^{q-1}, clamped to [0, 1].
/// The alternating sum cancels badly for small g, so it is evaluated in MPFR
/// with enough bits to cover the largest term whenever that term exceeds 1e3.
inline double fisher_pvalue(double g, std::size_t q) {
    if (q == 0) throw std::domain_error("fisher_pvalue: q must be positive");
    const double lower = 1.0 / static_cast<double>(q);
    if (!(g >= lower * (1.0 - 1e-12) && g <= 1.0 + 1e-12))
        throw std::domain_error("fisher_pvalue: g outside [1/q, 1]");
    if (q == 1) return 1.0;
    g = std::clamp(g, lower, 1.0);
    if (g >= 1.0) return 0.0;

    const std::size_t m = std::min<std::size_t>(q, static_cast<std::size_t>(std::floor(1.0 / g)));
    double max_log = -INFINITY;
    for (std::size_t j = 1; j <= m; ++j) {
        const double base = 1.0 - static_cast<double>(j) * g;
        if (base <= 0.0) break;
        max_log = std::max(max_log, detail::log_binomial(q, j) + static_cast<double>(q - 1) * std::log(base));
    }

    double p;
    if (max_log < std::log(1e3)) {
        CompensatedSum s;
        double binom = 1.0;
        for (std::size_t j = 1; j <= m; ++j) {
            binom = binom * static_cast<double>(q - j + 1) / static_cast<double>(j);
            const double base = 1.0 - static_cast<double>(j) * g;
            if (base <= 0.0) break;
            const double term = binom * std::pow(base, static_cast<double>(q - 1));
            s.add(j % 2 == 1 ? term : -term);
        }
        p = s.value();
    } else {
        const auto bits = static_cast<mpfr_prec_t>(128 + std::ceil(max_log / std::log(2.0)));
        detail::Mpfr sum(bits), binom(bits), base(bits), gg(bits), term(bits);
        mpfr_set_zero(sum.get(), 1);
        mpfr_set_ui(binom.get(), 1, MPFR_RNDN);
        mpfr_set_d(gg.get(), g, MPFR_RNDN);
        for (std::size_t j = 1; j <= m; ++j) {
            mpfr_mul_ui(binom.get(), binom.get(), static_cast<unsigned long>(q - j + 1), MPFR_RNDN);
            mpfr_div_ui(binom.get(), binom.get(), static_cast<unsigned long>(j), MPFR_RNDN);
            mpfr_mul_ui(base.get(), gg.get(), static_cast<unsigned long>(j), MPFR_RNDN);
            mpfr_ui_sub(base.get(), 1, base.get(), MPFR_RNDN);
            if (mpfr_sgn(base.get()) <= 0) break;
            mpfr_pow_ui(term.get(), base.get(), static_cast<unsigned long>(q - 1), MPFR_RNDN);
            mpfr_mul(term.get(), term.get(), binom.get(), MPFR_RNDN);
            if (j % 2 == 1)
                mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
            else
                mpfr_sub(sum.get(), sum.get(), term.get(), MPFR_RNDN);
        }
        p = mpfr_get_d(sum.get(), MPFR_RNDN);
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Empirical null of g for one estimator: Gaussian white noise of length n
/// pushed through the full periodogram pipeline.
class MonteCarloNull {
public:
    MonteCarloNull(std::size_t n, const EstimatorSpec& est, std::size_t reps, std::uint64_t seed,
                   const SolverConfig& cfg = {}, unsigned threads = 1)
        : g_(reps) {
        if (reps == 0) throw std::domain_error("MonteCarloNull: reps must be positive");
        parallel_for(reps, threads, [&](std::size_t r) {
            const auto y = gaussian_noise(n, derive_seed(seed, r, 0x4e554c4cULL));
            g_[r] = fisher_statistic(estimate(y, est, cfg).values).g;
        });
        std::sort(g_.begin(), g_.end());
    }

    /// (1 + #{g_null >= g}) / (1 + N)
    double pvalue(double g) const {
        const auto it = std::lower_bound(g_.begin(), g_.end(), g);
        const auto ge = static_cast<double>(g_.end() - it);
        return (1.0 + ge) / (1.0 + static_cast<double>(g_.size()));
    }

    std::size_t size() const noexcept { return g_.size(); }

private:
    std::vector<double> g_;
};

struct FisherResult {
    double g_stat = 0.0;
    double p_value = 1.0;
    std::size_t q = 0;
    std::size_t argmax_index = 0;
    double argmax_freq = 0.0;  // angular
    std::vector<double> levels;
    std::vector<bool> reject;  // reject[i] == (p_value <= levels[i])
};

inline FisherResult fisher_test(std::span<const double> ordinates, std::span<const double> freqs,
                                std::span<const double> levels, const MonteCarloNull* null = nullptr) {
    if (freqs.size() != ordinates.size()) throw std::invalid_argument("fisher_test: size mismatch");
    for (double l : levels)
        if (!(l > 0.0 && l < 1.0)) throw std::domain_error("fisher_test: significance level outside (0, 1)");
    const auto st = fisher_statistic(ordinates);
    FisherResult r;
    r.g_stat = st.g;
    r.q = ordinates.size();
    r.p_value = null ? null->pvalue(st.g) : fisher_pvalue(st.g, r.q);
    r.argmax_index = st.argmax;
    r.argmax_freq = freqs[st.argmax];
    r.levels.assign(levels.begin(), levels.end());
    for (double l : levels) r.reject.push_back(r.p_value <= l);
    return r;
}

// ---------------------------------------------------------------------------
// Power study

enum class NullKind { Exact, MonteCarlo };

struct PowerStudySpec {
    ModelSpec model;
    std::vector<OutlierSpec> contaminations;  // t_star unset: random per replicate
    std::vector<EstimatorSpec> estimators;
    std::size_t reps = 500;
    std::vector<double> levels{0.01, 0.05};
    std::uint64_t seed = 1;
    NullKind null = NullKind::Exact;
    std::size_t null_reps = 1000;
    SolverConfig solver{};
    unsigned threads = 1;

    void validate() const {
        model.validate();
        solver.validate();
        if (reps == 0) throw std::domain_error("power_study: reps must be >= 1");
        if (estimators.empty()) throw std::domain_error("power_study: no estimators");
        if (levels.empty()) throw std::domain_error("power_study: no significance levels");
        for (double l : levels)
            if (!(l > 0.0 && l < 1.0)) throw std::domain_error("power_study: level outside (0, 1)");
        for (const auto& e : estimators) e.validate();
        for (const auto& c : contaminations) {
            if (!(c.c > 0.0)) throw std::domain_error("power_study: contamination magnitude must be positive");
            if (model.n < outlier_extent(c.kind) + 1) throw std::domain_error("power_study: series too short");
            if (c.t_star) resolve_t_star(c, model.n);
        }
        if (null == NullKind::MonteCarlo && null_reps == 0)
            throw std::domain_error("power_study: null_reps must be >= 1");
    }
};

inline std::string outlier_label(const OutlierSpec& o) {
    const char* sym = o.kind == OutlierKind::SinglePoint ? "c1" : o.kind == OutlierKind::Burst ? "c2" : "c3";
    const char* type = o.kind == OutlierKind::SinglePoint ? "type1" : o.kind == OutlierKind::Burst ? "type2" : "type3";
    return std::string(type) + " " + sym + "=" + format_short(o.c) + "sd";
}

struct PowerCell {
    double pd = 0.0;
    double se = 0.0;
};

/// pd[scenario][level][estimator]; scenario 0 is the uncontaminated model.
/// difference[s - 1][level][estimator] = PD(clean) - PD(scenario s).
struct PowerTable {
    std::vector<std::string> scenarios;
    std::vector<std::string> estimators;
    std::vector<double> levels;
    std::vector<std::vector<std::vector<PowerCell>>> pd;
    std::vector<std::vector<std::vector<double>>> difference;
    std::size_t reps = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string null_kind = "exact";
    std::size_t nonconverged = 0;
};

/// Rejection rates of Fisher's test per (scenario, level, estimator).
/// Replicate r draws its clean series from derive_seed(seed, r, 0); a random
/// t_star for contamination kind k comes from derive_seed(seed, r, 100 + k),
/// so all magnitudes of one kind share the same placement within a replicate.
inline PowerTable power_study(const PowerStudySpec& spec) {
    spec.validate();
    const std::size_t ns = spec.contaminations.size() + 1;
    const std::size_t ne = spec.estimators.size();

    std::vector<std::optional<MonteCarloNull>> nulls(ne);
    if (spec.null == NullKind::MonteCarlo)
        for (std::size_t e = 0; e < ne; ++e)
            nulls[e].emplace(spec.model.n, spec.estimators[e], spec.null_reps, derive_seed(spec.seed, 0xA11, e),
                             spec.solver, spec.threads);

    std::vector<double> pvals(spec.reps * ns * ne, 1.0);
    std::vector<std::size_t> nonconv(spec.reps, 0);
    parallel_for(spec.reps, spec.threads, [&](std::size_t r) {
        const auto clean = generate(spec.model, derive_seed(spec.seed, r, 0));
        for (std::size_t s = 0; s < ns; ++s) {
            std::vector<double> y;
            if (s == 0) {
                y = clean;
            } else {
                OutlierSpec o = spec.contaminations[s - 1];
                if (!o.t_star) o.seed = derive_seed(spec.seed, r, 100 + static_cast<std::uint64_t>(o.kind));
                y = inject_outliers(clean, o);
            }
            for (std::size_t e = 0; e < ne; ++e) {
                const auto m = estimate(y, spec.estimators[e], spec.solver);
                nonconv[r] += m.nonconverged.empty() ? 0 : m.nonconverged[0];
                const auto st = fisher_statistic(m.values);
                pvals[(r * ns + s) * ne + e] =
                    nulls[e] ? nulls[e]->pvalue(st.g) : fisher_pvalue(st.g, m.values.size());
            }
        }
    });

    PowerTable t;
    t.scenarios.push_back("no outliers");
    for (const auto& c : spec.contaminations) t.scenarios.push_back(outlier_label(c));
    for (const auto& e : spec.estimators) t.estimators.push_back(label(e));
    t.levels = spec.levels;
    t.reps = spec.reps;
    t.n = spec.model.n;
    t.seed = spec.seed;
    t.null_kind = spec.null == NullKind::Exact ? "exact" : "montecarlo";
    for (auto c : nonconv) t.nonconverged += c;
    const double R = static_cast<double>(spec.reps);
    const std::size_t nl = spec.levels.size();
    std::vector<long> hits(ns * nl * ne, 0);
    t.pd.assign(ns, std::vector<std::vector<PowerCell>>(nl, std::vector<PowerCell>(ne)));
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t l = 0; l < nl; ++l)
            for (std::size_t e = 0; e < ne; ++e) {
                long& h = hits[(s * nl + l) * ne + e];
                for (std::size_t r = 0; r < spec.reps; ++r)
                    if (pvals[(r * ns + s) * ne + e] <= spec.levels[l]) ++h;
                const double pd = static_cast<double>(h) / R;
                t.pd[s][l][e] = {pd, std::sqrt(pd * (1.0 - pd) / R)};
            }
    t.difference.assign(ns - 1, std::vector<std::vector<double>>(nl, std::vector<double>(ne)));
    for (std::size_t s = 1; s < ns; ++s)
        for (std::size_t l = 0; l < nl; ++l)
            for (std::size_t e = 0; e < ne; ++e)
                t.difference[s - 1][l][e] =
                    static_cast<double>(hits[l * ne + e] - hits[(s * nl + l) * ne + e]) / R;
    return t;
}

}  // namespace ahp
