#pragma once

// CSV / JSON serialisation and atomic file output.

#include <nlohmann/json.hpp>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ahp/inference.hpp"
#include "ahp/periodogram.hpp"
#include "ahp/spectrogram.hpp"
#include "ahp/spectrum.hpp"

namespace ahp {

using json = nlohmann::ordered_json;

/// Syntactically malformed input file.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline double normalized_frequency(double omega) { return omega / (2.0 * std::numbers::pi); }

// ---------------------------------------------------------------------------
// Input

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find_first_of(",;\t", start);
        f.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return f;
}

}  // namespace detail

/// One numeric column, or two columns (index, value); an optional
/// non-numeric header on the first non-empty line. Blank lines and lines
/// starting with '#' are skipped.
inline std::vector<double> parse_series_csv(std::string_view text, const std::string& source = "<input>") {
    std::vector<double> values;
    std::size_t line_no = 0, columns = 0;
    bool seen_first = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = detail::split_fields(line);
        auto fail = [&](const std::string& why) {
            throw InputError(source + ":" + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() > 2) fail("expected 1 or 2 columns, found " + std::to_string(fields.size()));
        std::vector<double> nums(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && detail::parse_double(fields[i], nums[i]);
        if (!seen_first) {
            seen_first = true;
            columns = fields.size();
            if (!numeric) continue;  // header
        }
        if (fields.size() != columns)
            fail("expected " + std::to_string(columns) + " column(s), found " + std::to_string(fields.size()));
        if (!numeric) fail("non-numeric value '" + std::string(line) + "'");
        const double v = nums.back();
        if (!std::isfinite(v)) fail("non-finite value");
        values.push_back(v);
    }
    if (values.empty()) throw InputError(source + ": no numeric data");
    return values;
}

inline std::vector<double> read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_series_csv(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Output

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string alpha_column_name(double a) { return "alpha_" + format_short(a); }

inline std::string series_csv(std::span<const double> y) {
    std::string s = "value\n";
    for (double v : y) s += fmt_num(v) + "\n";
    return s;
}

inline std::string periodogram_csv(const PeriodogramMatrix& m) {
    std::string s = "freq";
    for (double a : m.alphas) s += "," + alpha_column_name(a);
    s += "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        s += fmt_num(normalized_frequency(m.freqs[i]));
        for (std::size_t j = 0; j < m.cols(); ++j) s += "," + fmt_num(m.at(i, j));
        s += "\n";
    }
    return s;
}

inline json psi_json(const PsiSpec& p) {
    return {{"mode", p.mode == PsiMode::Absolute ? "absolute" : "std_multiple"}, {"value", p.value}};
}

inline std::vector<double> normalized_frequencies(std::span<const double> freqs) {
    std::vector<double> f;
    for (double w : freqs) f.push_back(normalized_frequency(w));
    return f;
}

inline json matrix_rows(std::span<const double> values, std::size_t rows, std::size_t cols) {
    json v = json::array();
    for (std::size_t i = 0; i < rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cols; ++j) row.push_back(values[i * cols + j]);
        v.push_back(std::move(row));
    }
    return v;
}

inline json periodogram_json(const PeriodogramMatrix& m) {
    json j;
    j["n"] = m.n;
    j["psi"] = m.psi_resolved;
    j["alphas"] = m.alphas;
    j["freqs"] = normalized_frequencies(m.freqs);
    j["values"] = matrix_rows(m.values, m.rows(), m.cols());
    j["normalized"] = m.normalized;
    j["diagnostics"] = {{"mu", m.mu}, {"nonconverged", m.nonconverged}, {"warnings", m.warnings}};
    return j;
}

inline std::string averaged_csv(const AveragedPeriodogram& a) {
    std::string s = "freq";
    for (const auto& l : a.labels) s += ",\"" + l + "\"";
    s += "\n";
    for (std::size_t i = 0; i < a.rows(); ++i) {
        s += fmt_num(normalized_frequency(a.freqs[i]));
        for (std::size_t j = 0; j < a.cols(); ++j) s += "," + fmt_num(a.at(i, j));
        s += "\n";
    }
    return s;
}

inline json averaged_json(const AveragedPeriodogram& a) {
    json j;
    j["n"] = a.n;
    j["reps"] = a.reps;
    j["estimators"] = a.labels;
    j["freqs"] = normalized_frequencies(a.freqs);
    j["values"] = matrix_rows(a.values, a.rows(), a.cols());
    j["normalized"] = a.normalized;
    j["bandwidth"] = a.bandwidth;
    j["mean_mu"] = a.mu;
    j["nonconverged"] = a.nonconverged;
    return j;
}

inline std::string ahs_csv(const AHSEstimate& e) {
    std::string s = "freq";
    for (double a : e.alphas) s += "," + alpha_column_name(a);
    s += "\n";
    for (std::size_t i = 0; i < e.rows(); ++i) {
        s += fmt_num(normalized_frequency(e.freqs[i]));
        for (std::size_t j = 0; j < e.cols(); ++j) s += "," + fmt_num(e.at(i, j));
        s += "\n";
    }
    s += "eta";
    for (double v : e.eta) s += "," + fmt_num(v);
    s += "\n";
    return s;
}

inline json ahs_json(const AHSEstimate& e) {
    json j;
    j["n"] = e.n;
    j["psi"] = psi_json(e.psi);
    j["alphas"] = e.alphas;
    j["freqs"] = normalized_frequencies(e.freqs);
    j["values"] = matrix_rows(e.values, e.rows(), e.cols());
    j["normalized"] = e.normalized;
    j["method"] = method_name(e.method);
    j["eta"] = e.eta;
    j["mu_hat"] = e.mu_hat;
    return j;
}

/// Model rows x estimator columns with one sub-row per level, then the
/// difference block (clean PD minus contaminated PD).
inline std::string power_table_csv(const PowerTable& t) {
    std::string s = "model,level";
    for (const auto& e : t.estimators) s += ",\"" + e + "\"";
    s += "\n";
    for (std::size_t sc = 0; sc < t.scenarios.size(); ++sc)
        for (std::size_t l = 0; l < t.levels.size(); ++l) {
            s += t.scenarios[sc] + "," + fmt_num(t.levels[l]);
            for (const auto& c : t.pd[sc][l]) s += "," + fmt_num(c.pd);
            s += "\n";
        }
    for (std::size_t sc = 1; sc < t.scenarios.size(); ++sc)
        for (std::size_t l = 0; l < t.levels.size(); ++l) {
            s += "difference " + t.scenarios[sc] + "," + fmt_num(t.levels[l]);
            for (double d : t.difference[sc - 1][l]) s += "," + fmt_num(d);
            s += "\n";
        }
    return s;
}

inline json power_table_json(const PowerTable& t) {
    json j;
    j["reps"] = t.reps;
    j["n"] = t.n;
    j["seed"] = t.seed;
    j["null"] = t.null_kind;
    j["levels"] = t.levels;
    j["estimators"] = t.estimators;
    json rows = json::array();
    for (std::size_t sc = 0; sc < t.scenarios.size(); ++sc)
        for (std::size_t l = 0; l < t.levels.size(); ++l) {
            json cells = json::array();
            for (std::size_t e = 0; e < t.estimators.size(); ++e) {
                json c = {{"estimator", t.estimators[e]}, {"pd", t.pd[sc][l][e].pd}, {"se", t.pd[sc][l][e].se}};
                if (sc > 0) c["difference"] = t.difference[sc - 1][l][e];
                cells.push_back(std::move(c));
            }
            rows.push_back({{"model", t.scenarios[sc]}, {"level", t.levels[l]}, {"cells", std::move(cells)}});
        }
    j["rows"] = std::move(rows);
    j["nonconverged"] = t.nonconverged;
    return j;
}

/// Long format: one row per (window, frequency). Centres are 1-based sample positions.
inline std::string spectrogram_csv(const SpectrogramResult& r) {
    std::string s = "center,freq,log_value\n";
    for (std::size_t w = 0; w < r.windows(); ++w)
        for (std::size_t i = 0; i < r.freqs.size(); ++i)
            s += fmt_num(r.centers[w] + 1.0) + "," + fmt_num(normalized_frequency(r.freqs[i])) + "," +
                 fmt_num(r.at(w, i)) + "\n";
    return s;
}

inline json spectrogram_json(const SpectrogramResult& r) {
    json j;
    j["window_len"] = r.window_len;
    j["hop"] = r.hop;
    j["estimator"] = r.estimator;
    std::vector<std::size_t> starts;
    std::vector<double> centers;
    for (std::size_t w = 0; w < r.windows(); ++w) {
        starts.push_back(r.starts[w] + 1);
        centers.push_back(r.centers[w] + 1.0);
    }
    j["starts"] = starts;
    j["centers"] = centers;
    j["freqs"] = normalized_frequencies(r.freqs);
    j["values"] = matrix_rows(r.values, r.windows(), r.freqs.size());
    j["log_applied"] = r.log_applied;
    j["nonconverged"] = r.nonconverged;
    return j;
}

inline json fisher_json(const FisherResult& f, std::string_view estimator, std::string_view column) {
    json j;
    j["estimator"] = estimator;
    j["column"] = column;
    j["g"] = f.g_stat;
    j["p_value"] = f.p_value;
    j["q"] = f.q;
    j["argmax_freq"] = normalized_frequency(f.argmax_freq);
    json rej = json::array();
    for (std::size_t i = 0; i < f.levels.size(); ++i) rej.push_back({{"level", f.levels[i]}, {"reject", f.reject[i]}});
    j["tests"] = std::move(rej);
    return j;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace ahp
