#pragma once

// JSON-configured experiments. A config is validated completely before any
// simulation; running it yields the full set of output files in memory so
// the caller can write them only once everything succeeded.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahp/inference.hpp"
#include "ahp/io.hpp"
#include "ahp/spectrogram.hpp"
#include "ahp/spectrum.hpp"
#include "ahp/svg.hpp"

namespace ahp {

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { PowerStudy, AveragedPeriodogram, GarchAhs, Spectrogram };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::PowerStudy;
    std::string name = "experiment";
    std::uint64_t seed = 1;
    std::optional<unsigned> threads;
    ModelSpec model;
    std::vector<EstimatorSpec> estimators;
    std::vector<double> alpha_grid;  // AveragedPeriodogram / GarchAhs
    PsiSpec psi{};                   // for alpha_grid
    std::vector<OutlierSpec> contaminations;
    std::size_t reps = 200;
    std::vector<double> levels{0.01, 0.05};
    NullKind null = NullKind::Exact;
    std::size_t null_reps = 1000;
    bool normalize = true;
    std::size_t smooth_bw = 0;  // 0: none
    bool smooth_default = false;
    bool svg = true;
    SolverConfig solver{};
    std::size_t window = 400;  // Spectrogram
    std::size_t overlap = 200;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + (j.contains(key) ? "wrong type" : "missing"));
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + "." + key + ": expected a nonnegative integer");
    return v.get<std::size_t>();
}

inline PsiSpec parse_psi(const json& j, const std::string& where, PsiSpec fallback) {
    const bool has_m = j.contains("psi_mult"), has_a = j.contains("psi");
    if (has_m && has_a) throw ConfigError(where + ": give either psi or psi_mult, not both");
    if (has_m) return PsiSpec::std_multiple(get<double>(j, "psi_mult", where));
    if (has_a) return PsiSpec::absolute(get<double>(j, "psi", where));
    return fallback;
}

inline EstimatorSpec parse_estimator(const json& j, const std::string& where) {
    check_keys(j, where, {"type", "alpha", "psi", "psi_mult"});
    const auto type = get<std::string>(j, "type", where);
    auto need_alpha = [&] { return get<double>(j, "alpha", where); };
    auto no_psi = [&] {
        if (j.contains("psi") || j.contains("psi_mult")) throw ConfigError(where + ": psi not allowed for " + type);
    };
    EstimatorSpec e;
    if (type == "ahp") {
        e = EstimatorSpec::ahp(need_alpha(), parse_psi(j, where, PsiSpec{}));
    } else if (type == "pg") {
        no_psi();
        if (j.contains("alpha")) throw ConfigError(where + ": alpha not allowed for pg");
        e = EstimatorSpec::pg();
    } else if (type == "ep") {
        no_psi();
        e = EstimatorSpec::ep(need_alpha());
    } else if (type == "hp") {
        if (j.contains("alpha")) throw ConfigError(where + ": alpha not allowed for hp");
        e = EstimatorSpec::hp(parse_psi(j, where, PsiSpec{}));
    } else if (type == "qp-approx") {
        no_psi();
        e = EstimatorSpec::qp_approx(need_alpha());
    } else {
        throw ConfigError(where + ".type: unknown estimator '" + type + "'");
    }
    try {
        e.validate();
    } catch (const std::domain_error& ex) {
        throw ConfigError(where + ": " + ex.what());
    }
    return e;
}

inline OutlierSpec parse_outlier(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "c", "t_star"});
    const auto kind = get<std::string>(j, "kind", where);
    OutlierSpec o;
    if (kind == "single_point" || kind == "type1")
        o.kind = OutlierKind::SinglePoint;
    else if (kind == "burst" || kind == "type2")
        o.kind = OutlierKind::Burst;
    else if (kind == "eyeblink" || kind == "type3")
        o.kind = OutlierKind::Eyeblink;
    else
        throw ConfigError(where + ".kind: unknown contamination '" + kind + "'");
    o.c = get<double>(j, "c", where);
    if (!(o.c > 0.0)) throw ConfigError(where + ".c: must be positive");
    if (j.contains("t_star")) {
        const std::size_t t = get_count(j, "t_star", 0, where);
        if (t < 1) throw ConfigError(where + ".t_star: must be >= 1");
        o.t_star = t;
    }
    return o;
}

inline ModelSpec parse_model(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const auto kind = get<std::string>(j, "kind", where);
    ModelSpec m;
    if (kind == "ar2") {
        check_keys(j, where, {"kind", "n", "burn_in", "phi1", "phi2", "r", "f"});
        const bool polar = j.contains("r") || j.contains("f");
        const bool direct = j.contains("phi1") || j.contains("phi2");
        if (polar == direct) throw ConfigError(where + ": give either (phi1, phi2) or (r, f)");
        m.params = polar ? Ar2Params::from_polar(get<double>(j, "r", where), get<double>(j, "f", where))
                         : Ar2Params{get<double>(j, "phi1", where), get<double>(j, "phi2", where)};
    } else if (kind == "hidden") {
        check_keys(j, where, {"kind", "n", "burn_in", "phi1", "phi2", "r", "f", "b0", "b1", "b2", "f0", "f1"});
        HiddenParams h;
        if (j.contains("r") || j.contains("f"))
            h.base = Ar2Params::from_polar(get<double>(j, "r", where), get<double>(j, "f", where));
        if (j.contains("phi1") || j.contains("phi2"))
            h.base = Ar2Params{get<double>(j, "phi1", where), get<double>(j, "phi2", where)};
        h.b0 = get_or(j, "b0", h.b0, where);
        h.b1 = get_or(j, "b1", h.b1, where);
        h.b2 = get_or(j, "b2", h.b2, where);
        h.f0 = get_or(j, "f0", h.f0, where);
        h.f1 = get_or(j, "f1", h.f1, where);
        m.params = h;
    } else if (kind == "mixture") {
        check_keys(j, where, {"kind", "n", "burn_in"});
        m.params = MixtureParams{};
    } else if (kind == "garch11") {
        check_keys(j, where, {"kind", "n", "burn_in", "omega0", "arch", "garch"});
        GarchParams g;
        g.omega0 = get_or(j, "omega0", g.omega0, where);
        g.arch = get_or(j, "arch", g.arch, where);
        g.garch = get_or(j, "garch", g.garch, where);
        m.params = g;
    } else if (kind == "white_noise") {
        check_keys(j, where, {"kind", "n", "burn_in", "sd"});
        m.params = WhiteNoiseParams{get_or(j, "sd", 1.0, where)};
    } else {
        throw ConfigError(where + ".kind: unknown model '" + kind + "'");
    }
    m.n = get_count(j, "n", m.n, where);
    m.burn_in = get_count(j, "burn_in", m.burn_in, where);
    try {
        m.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return m;
}

inline SolverConfig parse_solver(const json& j, const std::string& where) {
    check_keys(j, where, {"tolerance", "grad_tolerance", "max_iter", "weight_floor", "max_halvings", "include_intercept"});
    SolverConfig c;
    c.tolerance = get_or(j, "tolerance", c.tolerance, where);
    if (j.contains("grad_tolerance")) c.grad_tolerance = get<double>(j, "grad_tolerance", where);
    c.max_iter = static_cast<int>(get_count(j, "max_iter", static_cast<std::size_t>(c.max_iter), where));
    c.weight_floor = get_or(j, "weight_floor", c.weight_floor, where);
    c.max_halvings = static_cast<int>(get_count(j, "max_halvings", static_cast<std::size_t>(c.max_halvings), where));
    c.include_intercept = get_or(j, "include_intercept", c.include_intercept, where);
    try {
        c.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

inline std::vector<double> parse_alpha_grid(const json& j, const std::string& where) {
    if (j.is_string()) {
        if (j.get<std::string>() != "default") throw ConfigError(where + ": expected \"default\" or a list");
        return default_alpha_grid();
    }
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty list of alphas");
    std::vector<double> a;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(where + ": alphas must be numbers");
        const double x = v.get<double>();
        if (!(x > 0.0 && x < 1.0)) throw ConfigError(where + ": alpha outside (0, 1)");
        a.push_back(x);
    }
    return a;
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const json& j) {
    using namespace detail;
    const std::string w = "config";
    check_keys(j, w,
               {"experiment", "name", "description", "seed", "threads", "model", "estimators", "alpha_grid", "psi",
                "psi_mult", "contaminations", "contamination", "reps", "levels", "null", "null_reps", "normalize",
                "smooth_bw", "svg", "solver", "window", "overlap"});
    ExperimentConfig c;
    const auto kind = get<std::string>(j, "experiment", w);
    if (kind == "power_study")
        c.kind = ExperimentKind::PowerStudy;
    else if (kind == "averaged_periodogram")
        c.kind = ExperimentKind::AveragedPeriodogram;
    else if (kind == "garch_ahs")
        c.kind = ExperimentKind::GarchAhs;
    else if (kind == "spectrogram")
        c.kind = ExperimentKind::Spectrogram;
    else
        throw ConfigError("config.experiment: unknown experiment '" + kind + "'");

    c.name = get_or<std::string>(j, "name", kind, w);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
        throw ConfigError("config.name: must be a plain file stem");
    if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
        throw ConfigError("config.seed: required nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) {
        const auto t = get_count(j, "threads", 1, w);
        if (t == 0) throw ConfigError("config.threads: must be >= 1");
        c.threads = static_cast<unsigned>(t);
    }
    if (!j.contains("model")) throw ConfigError("config.model: missing");
    c.model = parse_model(j.at("model"), "config.model");
    c.model.seed = c.seed;
    if (c.kind == ExperimentKind::GarchAhs && c.model.kind() != ModelKind::Garch11)
        throw ConfigError("config.model: garch_ahs requires kind garch11");

    if (j.contains("estimators")) {
        const auto& es = j.at("estimators");
        if (!es.is_array() || es.empty()) throw ConfigError("config.estimators: expected a nonempty list");
        for (std::size_t i = 0; i < es.size(); ++i)
            c.estimators.push_back(parse_estimator(es[i], "config.estimators[" + std::to_string(i) + "]"));
    }
    if (j.contains("alpha_grid")) c.alpha_grid = parse_alpha_grid(j.at("alpha_grid"), "config.alpha_grid");
    c.psi = parse_psi(j, w, PsiSpec{});
    if (c.psi.value < 0.0 || !std::isfinite(c.psi.value)) throw ConfigError("config.psi: must be >= 0");

    if (j.contains("contaminations")) {
        const auto& cs = j.at("contaminations");
        if (!cs.is_array()) throw ConfigError("config.contaminations: expected a list");
        for (std::size_t i = 0; i < cs.size(); ++i)
            c.contaminations.push_back(parse_outlier(cs[i], "config.contaminations[" + std::to_string(i) + "]"));
    }
    if (j.contains("contamination")) c.contaminations.push_back(parse_outlier(j.at("contamination"), "config.contamination"));

    c.reps = get_count(j, "reps", c.reps, w);
    if (j.contains("levels")) {
        c.levels.clear();
        const auto& ls = j.at("levels");
        if (!ls.is_array() || ls.empty()) throw ConfigError("config.levels: expected a nonempty list");
        for (const auto& l : ls) {
            if (!l.is_number() || !(l.get<double>() > 0.0 && l.get<double>() < 1.0))
                throw ConfigError("config.levels: each level must lie in (0, 1)");
            c.levels.push_back(l.get<double>());
        }
    }
    if (j.contains("null")) {
        const auto nk = get<std::string>(j, "null", w);
        if (nk == "exact")
            c.null = NullKind::Exact;
        else if (nk == "montecarlo")
            c.null = NullKind::MonteCarlo;
        else
            throw ConfigError("config.null: expected \"exact\" or \"montecarlo\"");
    }
    c.null_reps = get_count(j, "null_reps", c.null_reps, w);
    c.normalize = get_or(j, "normalize", c.normalize, w);
    if (j.contains("smooth_bw")) {
        const auto& b = j.at("smooth_bw");
        if (b.is_string() && b.get<std::string>() == "default")
            c.smooth_default = true;
        else
            c.smooth_bw = get_count(j, "smooth_bw", 0, w);
    }
    c.svg = get_or(j, "svg", c.svg, w);
    if (j.contains("solver")) c.solver = parse_solver(j.at("solver"), "config.solver");
    c.window = get_count(j, "window", c.window, w);
    c.overlap = get_count(j, "overlap", c.overlap, w);

    // cross-field checks
    if (c.reps == 0 && c.kind != ExperimentKind::Spectrogram) throw ConfigError("config.reps: must be >= 1");
    const std::size_t q = fourier_count(c.kind == ExperimentKind::Spectrogram ? std::max<std::size_t>(c.window, 4)
                                                                              : c.model.n);
    if (c.smooth_default) c.smooth_bw = default_bandwidth(c.kind == ExperimentKind::Spectrogram ? c.window : c.model.n);
    if (c.smooth_bw != 0 && (c.smooth_bw < 3 || c.smooth_bw % 2 == 0 || c.smooth_bw > q))
        throw ConfigError("config.smooth_bw: must be 0 or odd, >= 3 and <= " + std::to_string(q));
    switch (c.kind) {
        case ExperimentKind::PowerStudy:
            if (c.estimators.empty()) throw ConfigError("config.estimators: required for power_study");
            if (!c.alpha_grid.empty()) throw ConfigError("config.alpha_grid: not used by power_study");
            break;
        case ExperimentKind::AveragedPeriodogram:
            if (c.estimators.empty() && c.alpha_grid.empty())
                throw ConfigError("config: averaged_periodogram needs estimators or alpha_grid");
            if (c.contaminations.size() > 1)
                throw ConfigError("config.contaminations: averaged_periodogram takes at most one");
            break;
        case ExperimentKind::GarchAhs:
            if (c.alpha_grid.empty()) throw ConfigError("config.alpha_grid: required for garch_ahs");
            if (!c.estimators.empty()) throw ConfigError("config.estimators: not used by garch_ahs");
            break;
        case ExperimentKind::Spectrogram:
            if (c.estimators.empty()) throw ConfigError("config.estimators: required for spectrogram");
            if (c.window < 16) throw ConfigError("config.window: must be >= 16");
            if (c.overlap >= c.window) throw ConfigError("config.overlap: must be smaller than window");
            if (c.model.n < c.window) throw ConfigError("config.model.n: shorter than one window");
            break;
    }
    for (const auto& o : c.contaminations) {
        if (c.model.n < outlier_extent(o.kind) + 1) throw ConfigError("config: series too short for contamination");
        if (o.t_star && *o.t_star > c.model.n - outlier_extent(o.kind))
            throw ConfigError("config: t_star outside the legal range for its contamination kind");
    }
    if (c.null == NullKind::MonteCarlo && c.null_reps == 0) throw ConfigError("config.null_reps: must be >= 1");
    return c;
}

inline ExperimentConfig parse_experiment_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_experiment(j);
}

/// file name -> content
using OutputFiles = std::map<std::string, std::string>;

struct ExperimentResult {
    OutputFiles files;
    std::size_t nonconverged = 0;
    std::size_t fits = 0;
};

namespace detail {

inline std::vector<std::string> estimator_labels(const std::vector<EstimatorSpec>& es) {
    std::vector<std::string> l;
    for (const auto& e : es) l.push_back(label(e));
    return l;
}

inline std::string averaged_svg(const AveragedPeriodogram& a, const std::string& title) {
    const auto f = normalized_frequencies(a.freqs);
    if (a.cols() > 8) {
        std::vector<double> alphas;
        for (const auto& e : a.estimators) alphas.push_back(e.effective_alpha());
        return svg::heatmap(a.values, a.rows(), a.cols(), f, alphas, title, "frequency", "alpha");
    }
    std::vector<svg::Series> s;
    for (std::size_t j = 0; j < a.cols(); ++j) s.push_back({a.labels[j], a.column(j)});
    return svg::line_plot(f, s, title, "frequency", a.normalized ? "normalized ordinate" : "ordinate");
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& c, unsigned threads) {
    ExperimentResult res;
    auto& out = res.files;
    const std::string& stem = c.name;
    switch (c.kind) {
        case ExperimentKind::PowerStudy: {
            PowerStudySpec s;
            s.model = c.model;
            s.contaminations = c.contaminations;
            s.estimators = c.estimators;
            s.reps = c.reps;
            s.levels = c.levels;
            s.seed = c.seed;
            s.null = c.null;
            s.null_reps = c.null_reps;
            s.solver = c.solver;
            s.threads = threads;
            const auto t = power_study(s);
            out[stem + ".csv"] = power_table_csv(t);
            out[stem + ".json"] = dump(power_table_json(t));
            if (c.svg) {
                std::vector<double> x;
                for (std::size_t i = 0; i < t.scenarios.size(); ++i) x.push_back(static_cast<double>(i));
                std::vector<svg::Series> series;
                for (std::size_t e = 0; e < t.estimators.size(); ++e) {
                    svg::Series sr{t.estimators[e], {}};
                    for (std::size_t sc = 0; sc < t.scenarios.size(); ++sc) sr.y.push_back(t.pd[sc][0][e].pd);
                    series.push_back(std::move(sr));
                }
                out[stem + ".svg"] = svg::line_plot(x, series, "PD at level " + format_short(t.levels[0]),
                                                    "scenario (0 = no outliers)", "PD");
            }
            res.nonconverged = t.nonconverged;
            for (const auto& e : c.estimators)
                if (e.kind != EstimatorKind::Pg) res.fits += t.reps * t.scenarios.size() * fourier_count(t.n);
            break;
        }
        case ExperimentKind::AveragedPeriodogram: {
            std::vector<EstimatorSpec> est = c.estimators;
            for (double a : c.alpha_grid) est.push_back(EstimatorSpec::ahp(a, c.psi));
            AveragingOptions opt;
            opt.reps = c.reps;
            opt.normalize = c.normalize;
            opt.bandwidth = c.smooth_bw;
            opt.solver = c.solver;
            opt.threads = threads;
            if (!c.contaminations.empty()) opt.contamination = c.contaminations.front();
            const auto a = monte_carlo_average(c.model, est, opt);
            out[stem + ".csv"] = averaged_csv(a);
            out[stem + ".json"] = dump(averaged_json(a));
            if (c.svg)
                out[stem + ".svg"] = detail::averaged_svg(a, "averaged periodograms, " + model_name(c.model.kind()) +
                                                                 ", " + std::to_string(c.reps) + " reps");
            res.nonconverged = a.nonconverged;
            for (const auto& e : est)
                if (e.kind != EstimatorKind::Pg) res.fits += c.reps * fourier_count(c.model.n);
            break;
        }
        case ExperimentKind::GarchAhs: {
            AveragingOptions opt;
            opt.normalize = c.normalize;
            opt.bandwidth = c.smooth_bw;
            opt.solver = c.solver;
            opt.threads = threads;
            const auto e = ahs_theoretical_garch(std::get<GarchParams>(c.model.params), c.alpha_grid, c.psi, c.reps,
                                                 c.model.n, c.seed, opt);
            out[stem + ".csv"] = ahs_csv(e);
            out[stem + ".json"] = dump(ahs_json(e));
            if (c.svg)
                out[stem + ".svg"] = svg::heatmap(e.values, e.rows(), e.cols(), normalized_frequencies(e.freqs),
                                                  e.alphas, "GARCH(1,1) AHS, psi = " + psi_label(c.psi), "frequency",
                                                  "alpha");
            break;
        }
        case ExperimentKind::Spectrogram: {
            auto y = generate(c.model);
            for (std::size_t i = 0; i < c.contaminations.size(); ++i) {
                OutlierSpec o = c.contaminations[i];
                if (!o.t_star) o.seed = derive_seed(c.seed, i, 100 + static_cast<std::uint64_t>(o.kind));
                y = inject_outliers(y, o);
            }
            out[stem + "_series.csv"] = series_csv(y);
            for (std::size_t k = 0; k < c.estimators.size(); ++k) {
                const auto r = ahp_spectrogram(y, c.window, c.overlap, c.estimators[k], c.solver, threads);
                const std::string base = stem + "_" + std::to_string(k);
                out[base + ".csv"] = spectrogram_csv(r);
                out[base + ".json"] = dump(spectrogram_json(r));
                if (c.svg) {
                    std::vector<double> centers;
                    for (double v : r.centers) centers.push_back(v + 1.0);
                    out[base + ".svg"] = svg::heatmap(r.values, r.windows(), r.freqs.size(), centers,
                                                      normalized_frequencies(r.freqs), r.estimator + " spectrogram (log)",
                                                      "window centre", "frequency");
                }
                res.nonconverged += r.nonconverged;
                if (c.estimators[k].kind != EstimatorKind::Pg) res.fits += r.windows() * r.freqs.size();
            }
            break;
        }
    }
    return res;
}

}  // namespace ahp
