// ahp: command-line front end for the asymmetric Huber periodogram library.
//
//   ahp analyze series.csv [--alpha A ... | --alpha-grid [SPEC]] [--psi-mult M | --psi P]
//   ahp experiment presets/table1_desk.json --out-dir out
//   ahp simulate --model ar2 --n 200 --seed 7 --out series.csv
//   ahp spectrogram rr.csv --window 400 --overlap 200 --alpha 0.8 --psi-mult 0.674
//
// Exit codes: 0 success, 2 usage / configuration / malformed input, 3 data error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ahp/experiment.hpp"
#include "ahp/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::optional<unsigned> threads;
    std::string out_dir = ".";
};

struct EstimatorFlags {
    std::vector<double> alphas;
    std::string alpha_grid;  // empty: not requested
    std::optional<double> psi;
    std::optional<double> psi_mult;
    std::string estimator = "ahp";
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f) {
    cmd->add_option("--alpha", f.alphas, "Asymmetry level(s) in (0,1); repeatable")->delimiter(',');
    cmd->add_option("--alpha-grid", f.alpha_grid,
                    "Alpha grid: 'default' (0.05..0.95 step 0.02), 'lo:hi:step', or a comma list")
        ->expected(0, 1)
        ->default_str("default");
    auto* psi = cmd->add_option("--psi", f.psi, "Absolute threshold psi (0 requests the quantile surrogate)");
    auto* mult = cmd->add_option("--psi-mult", f.psi_mult, "Threshold as a multiple of the sample standard deviation");
    psi->excludes(mult);
    cmd->add_option("--estimator", f.estimator, "Estimator family")
        ->check(CLI::IsMember({"ahp", "pg", "ep", "hp", "qp-approx"}));
}

std::vector<double> parse_grid(const std::string& spec) {
    if (spec.empty() || spec == "default") return ahp::default_alpha_grid();
    std::vector<double> out;
    auto num = [&](const std::string& s) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw UsageError("--alpha-grid: cannot parse '" + s + "'");
        }
        if (pos != s.size()) throw UsageError("--alpha-grid: cannot parse '" + s + "'");
        return v;
    };
    if (spec.find(':') != std::string::npos) {
        std::stringstream ss(spec);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c);
        const double lo = num(a), hi = num(b), step = num(c);
        if (!(step > 0.0) || hi < lo) throw UsageError("--alpha-grid: need lo <= hi and step > 0");
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) out.push_back(std::round((lo + step * static_cast<double>(i)) * 1e9) / 1e9);
    } else {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(num(item));
    }
    return out;
}

/// Alpha list and psi spec for the requested estimator family.
struct Resolved {
    ahp::EstimatorKind kind;
    std::vector<double> alphas;
    ahp::PsiSpec psi;
};

Resolved resolve_estimator(const EstimatorFlags& f, bool grid_given) {
    Resolved r{ahp::EstimatorKind::Ahp, {}, ahp::PsiSpec{}};
    if (f.psi) r.psi = ahp::PsiSpec::absolute(*f.psi);
    if (f.psi_mult) r.psi = ahp::PsiSpec::std_multiple(*f.psi_mult);
    const bool psi_given = f.psi || f.psi_mult;
    r.alphas = f.alphas;
    if (grid_given) {
        if (!f.alphas.empty()) throw UsageError("--alpha and --alpha-grid are mutually exclusive");
        r.alphas = parse_grid(f.alpha_grid);
    }
    const std::string& e = f.estimator;
    if (e == "pg" || e == "hp") {
        if (!r.alphas.empty()) throw UsageError("--estimator " + e + " fixes alpha = 0.5; drop --alpha/--alpha-grid");
        r.alphas = {0.5};
    }
    if (r.alphas.empty()) r.alphas = {0.5};
    for (double a : r.alphas)
        if (!(a > 0.0 && a < 1.0)) throw UsageError("alpha " + ahp::format_short(a) + " outside (0, 1)");
    if (e == "pg") {
        if (psi_given) throw UsageError("--estimator pg takes no psi");
        r.kind = ahp::EstimatorKind::Pg;
    } else if (e == "ep") {
        if (psi_given) throw UsageError("--estimator ep fixes psi = 1e6 sd");
        r.kind = ahp::EstimatorKind::Ep;
        r.psi = ahp::PsiSpec::std_multiple(ahp::kLargePsiMultiple);
    } else if (e == "qp-approx") {
        if (psi_given) throw UsageError("--estimator qp-approx fixes psi = 1e-6 sd");
        r.kind = ahp::EstimatorKind::QpApprox;
        r.psi = ahp::PsiSpec::std_multiple(ahp::kSmallPsiMultiple);
    } else if (e == "hp") {
        r.kind = ahp::EstimatorKind::Hp;
    }
    if (!(r.psi.value >= 0.0) || !std::isfinite(r.psi.value)) throw UsageError("psi must be nonnegative and finite");
    return r;
}

std::vector<double> load_input(const std::string& path, bool log_input) {
    auto y = ahp::read_series_csv(path);
    if (log_input) {
        for (double& v : y) {
            if (!(v > 0.0)) throw std::domain_error("--log-input requires strictly positive values");
            v = std::log(v);
        }
    }
    return y;
}

void write_all(const fs::path& dir, const ahp::OutputFiles& files) {
    for (const auto& [name, content] : files) {
        ahp::write_atomic(dir / name, content);
        std::cout << (dir / name).string() << "\n";
    }
}

void warn_nonconvergence(std::size_t nonconverged, std::size_t fits) {
    if (fits == 0) return;
    const double frac = static_cast<double>(nonconverged) / static_cast<double>(fits);
    if (frac > 0.01)
        std::fprintf(stderr, "warning: %.2f%% of regression fits did not converge (%zu of %zu)\n", 100.0 * frac,
                     nonconverged, fits);
}

std::string stem_of(const std::string& path) {
    const auto s = fs::path(path).stem().string();
    return s.empty() ? "series" : s;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string input;
    EstimatorFlags est;
    bool normalize = false;
    std::size_t smooth_bw = 0;
    std::vector<double> levels{0.01, 0.05};
    bool log_input = false;
    std::string null = "exact";
    std::size_t reps = 1000;
    std::uint64_t seed = 1;
    std::string prefix;
    bool no_svg = false;
};

int run_analyze(const AnalyzeArgs& a, bool grid_given, const Common& c) {
    const auto r = resolve_estimator(a.est, grid_given);
    for (double l : a.levels)
        if (!(l > 0.0 && l < 1.0)) throw UsageError("--fisher-level must lie in (0, 1)");
    const auto y = load_input(a.input, a.log_input);
    const unsigned threads = ahp::resolve_threads(c.threads);

    ahp::PeriodogramMatrix m;
    if (r.kind == ahp::EstimatorKind::Pg)
        m = ahp::ordinary_pg(y);
    else
        m = ahp::compute_ahp(y, r.alphas, r.psi, {}, threads);
    for (const auto& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (r.kind != ahp::EstimatorKind::Pg) warn_nonconvergence(
        [&] {
            std::size_t s = 0;
            for (auto v : m.nonconverged) s += v;
            return s;
        }(),
        m.rows() * m.cols());

    // Fisher's statistic is scale free, so it is computed before normalising.
    std::unique_ptr<ahp::MonteCarloNull> null;
    ahp::json fisher = ahp::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
        ahp::EstimatorSpec spec{r.kind, m.alphas[j], r.psi};
        if (a.null == "montecarlo")
            null = std::make_unique<ahp::MonteCarloNull>(y.size(), spec, a.reps, a.seed, ahp::SolverConfig{}, threads);
        const auto col = m.column(j);
        const auto f = ahp::fisher_test(col, m.freqs, a.levels, null.get());
        fisher.push_back(ahp::fisher_json(f, ahp::label(spec), ahp::alpha_column_name(m.alphas[j])));
    }
    if (a.normalize) m = ahp::normalize(std::move(m));
    if (a.smooth_bw) m = ahp::smooth(std::move(m), a.smooth_bw);

    const std::string stem = a.prefix.empty() ? stem_of(a.input) : a.prefix;
    ahp::OutputFiles files;
    files[stem + "_periodogram.csv"] = ahp::periodogram_csv(m);
    files[stem + "_periodogram.json"] = ahp::dump(ahp::periodogram_json(m));
    ahp::json fj;
    fj["null"] = a.null;
    fj["columns"] = std::move(fisher);
    files[stem + "_fisher.json"] = ahp::dump(fj);
    if (!a.no_svg) {
        const auto f = ahp::normalized_frequencies(m.freqs);
        const std::string title = a.est.estimator + " periodogram of " + stem_of(a.input);
        if (m.cols() > 8) {
            files[stem + "_periodogram.svg"] =
                ahp::svg::heatmap(m.values, m.rows(), m.cols(), f, m.alphas, title, "frequency", "alpha");
        } else {
            std::vector<ahp::svg::Series> s;
            for (std::size_t j = 0; j < m.cols(); ++j) s.push_back({ahp::alpha_column_name(m.alphas[j]), m.column(j)});
            files[stem + "_periodogram.svg"] = ahp::svg::line_plot(f, s, title, "frequency", "ordinate");
        }
    }
    write_all(c.out_dir, files);
    return 0;
}

struct ExperimentArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
};

int run_experiment_cmd(const ExperimentArgs& a, const Common& c) {
    std::ifstream in(a.config, std::ios::binary);
    if (!in) throw ahp::ConfigError(a.config + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    ahp::json j;
    try {
        j = ahp::json::parse(ss.str());
    } catch (const ahp::json::parse_error& e) {
        throw ahp::ConfigError(a.config + ": invalid JSON: " + e.what());
    }
    if (a.seed && j.is_object()) j["seed"] = *a.seed;
    if (a.reps && j.is_object()) j["reps"] = *a.reps;
    const auto cfg = ahp::parse_experiment(j);
    const unsigned threads = ahp::resolve_threads(c.threads ? c.threads : cfg.threads);
    const auto res = ahp::run_experiment(cfg, threads);
    warn_nonconvergence(res.nonconverged, res.fits);
    write_all(c.out_dir, res.files);
    return 0;
}

struct SimulateArgs {
    std::string model = "ar2";
    std::size_t n = 200;
    std::size_t burn_in = ahp::kDefaultBurnIn;
    std::uint64_t seed = 1;
    std::optional<double> phi1, phi2;
    std::string outlier = "none";
    double c = 30.0;
    std::optional<std::size_t> t_star;
    std::string out = "series.csv";
};

int run_simulate(const SimulateArgs& a, const Common& c) {
    ahp::json mj = {{"kind", a.model}, {"n", a.n}, {"burn_in", a.burn_in}};
    if (a.phi1 || a.phi2) {
        if (!(a.phi1 && a.phi2)) throw UsageError("--phi1 and --phi2 must be given together");
        if (a.model != "ar2" && a.model != "hidden") throw UsageError("--phi1/--phi2 apply to ar2 and hidden only");
        mj["phi1"] = *a.phi1;
        mj["phi2"] = *a.phi2;
    } else if (a.model == "ar2") {
        mj["phi1"] = 0.9;
        mj["phi2"] = -0.9;
    }
    ahp::ModelSpec m = ahp::detail::parse_model(mj, "--model");
    auto y = ahp::generate(m, a.seed);
    if (a.outlier != "none") {
        ahp::json oj = {{"kind", a.outlier}, {"c", a.c}};
        if (a.t_star) oj["t_star"] = *a.t_star;
        auto o = ahp::detail::parse_outlier(oj, "--outlier");
        o.seed = ahp::derive_seed(a.seed, 0, 100 + static_cast<std::uint64_t>(o.kind));
        y = ahp::inject_outliers(y, o);
    }
    const fs::path out = fs::path(a.out).is_absolute() ? fs::path(a.out) : fs::path(c.out_dir) / a.out;
    ahp::write_atomic(out, ahp::series_csv(y));
    std::cout << out.string() << "\n";
    return 0;
}

struct SpectrogramArgs {
    std::string input;
    EstimatorFlags est;
    std::size_t window = 400;
    std::size_t overlap = 200;
    bool log_input = false;
    std::string prefix;
    bool no_svg = false;
};

int run_spectrogram(const SpectrogramArgs& a, const Common& c) {
    const auto r = resolve_estimator(a.est, false);
    if (r.alphas.size() != 1) throw UsageError("spectrogram takes a single --alpha");
    if (a.window < 16) throw UsageError("--window must be >= 16");
    if (a.overlap >= a.window) throw UsageError("--overlap must be smaller than --window");
    const auto y = load_input(a.input, a.log_input);
    const unsigned threads = ahp::resolve_threads(c.threads);
    const ahp::EstimatorSpec spec{r.kind, r.alphas[0], r.psi};
    const auto s = ahp::ahp_spectrogram(y, a.window, a.overlap, spec, {}, threads);
    if (spec.kind != ahp::EstimatorKind::Pg) warn_nonconvergence(s.nonconverged, s.windows() * s.freqs.size());

    const std::string stem = a.prefix.empty() ? stem_of(a.input) : a.prefix;
    ahp::OutputFiles files;
    files[stem + "_spectrogram.csv"] = ahp::spectrogram_csv(s);
    files[stem + "_spectrogram.json"] = ahp::dump(ahp::spectrogram_json(s));
    if (!a.no_svg) {
        std::vector<double> centers;
        for (double v : s.centers) centers.push_back(v + 1.0);
        files[stem + "_spectrogram.svg"] =
            ahp::svg::heatmap(s.values, s.windows(), s.freqs.size(), centers, ahp::normalized_frequencies(s.freqs),
                              s.estimator + " spectrogram (log)", "window centre", "frequency");
    }
    write_all(c.out_dir, files);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymmetric Huber periodogram toolkit"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--threads", common.threads, "Worker threads (default: AHP_THREADS or 1)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--out-dir", common.out_dir, "Output directory");
    };

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Periodogram, Fisher test and plot for one series");
    analyze->add_option("input", an.input, "CSV with one value column, or index,value")->required();
    add_estimator_flags(analyze, an.est);
    analyze->add_flag("--normalize", an.normalize, "Scale each alpha column to sum to one");
    analyze->add_option("--smooth-bw", an.smooth_bw, "Daniell smoothing width (odd, >= 3; 0 = none)");
    analyze->add_option("--fisher-level", an.levels, "Significance level(s) for Fisher's test")->delimiter(',');
    analyze->add_flag("--log-input", an.log_input, "Analyse log(values)");
    analyze->add_option("--null", an.null, "Fisher null distribution")->check(CLI::IsMember({"exact", "montecarlo"}));
    analyze->add_option("--reps", an.reps, "Monte Carlo null replicates")->check(CLI::PositiveNumber);
    analyze->add_option("--seed", an.seed, "Seed for the Monte Carlo null");
    analyze->add_option("--prefix", an.prefix, "Output file stem (default: input stem)");
    analyze->add_flag("--no-svg", an.no_svg, "Skip the SVG plot");
    add_common(analyze);

    ExperimentArgs ex;
    auto* experiment = app.add_subcommand("experiment", "Run a JSON-configured Monte Carlo experiment");
    experiment->add_option("config", ex.config, "Experiment config (JSON)")->required();
    experiment->add_option("--seed", ex.seed, "Override the config seed");
    experiment->add_option("--reps", ex.reps, "Override the config replicate count")->check(CLI::PositiveNumber);
    add_common(experiment);

    SimulateArgs si;
    auto* simulate = app.add_subcommand("simulate", "Write a synthetic series to CSV");
    simulate->add_option("--model", si.model, "Model")
        ->check(CLI::IsMember({"ar2", "hidden", "mixture", "garch11", "white_noise"}));
    simulate->add_option("--n", si.n, "Series length")->check(CLI::Range(8, 100000000));
    simulate->add_option("--burn-in", si.burn_in, "Discarded warm-up samples");
    simulate->add_option("--seed", si.seed, "Seed");
    simulate->add_option("--phi1", si.phi1, "AR(2) coefficient phi1");
    simulate->add_option("--phi2", si.phi2, "AR(2) coefficient phi2");
    simulate->add_option("--outlier", si.outlier, "Contamination")
        ->check(CLI::IsMember({"none", "type1", "type2", "type3"}));
    simulate->add_option("--c", si.c, "Contamination magnitude (multiple of sd)");
    simulate->add_option("--t-star", si.t_star, "1-based contamination start (default: random)");
    simulate->add_option("--out", si.out, "Output CSV (relative to --out-dir)");
    add_common(simulate);

    SpectrogramArgs sp;
    auto* spectrogram = app.add_subcommand("spectrogram", "Sliding-window log periodogram of one series");
    spectrogram->add_option("input", sp.input, "CSV with one value column, or index,value")->required();
    add_estimator_flags(spectrogram, sp.est);
    spectrogram->add_option("--window", sp.window, "Window length");
    spectrogram->add_option("--overlap", sp.overlap, "Overlap between consecutive windows");
    spectrogram->add_flag("--log-input", sp.log_input, "Analyse log(values)");
    spectrogram->add_option("--prefix", sp.prefix, "Output file stem (default: input stem)");
    spectrogram->add_flag("--no-svg", sp.no_svg, "Skip the SVG plot");
    add_common(spectrogram);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*analyze) {
            const bool grid_given = analyze->count("--alpha-grid") > 0;
            return run_analyze(an, grid_given, common);
        }
        if (*spectrogram) {
            if (spectrogram->count("--alpha-grid") > 0) throw UsageError("spectrogram takes a single --alpha");
            return run_spectrogram(sp, common);
        }
        if (*experiment) return run_experiment_cmd(ex, common);
        if (*simulate) return run_simulate(si, common);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ahp::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ahp::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
