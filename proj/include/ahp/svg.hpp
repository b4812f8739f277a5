#pragma once

// Minimal deterministic SVG: multi-series line plots and heatmaps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace ahp::svg {

struct Series {
    std::string name;
    std::vector<double> y;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};

// viridis-like ramp, linear interpolation between 5 stops
inline std::string ramp(double t) {
    static constexpr double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

inline std::string header(int w, int h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) +
           "</text>\n";
}

}  // namespace detail

/// Line plot of several series sharing the x values.
inline std::string line_plot(std::span<const double> x, std::span<const Series> series, const std::string& title,
                             const std::string& xlabel, const std::string& ylabel) {
    constexpr int W = 720, H = 440, L = 70, R = 190, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    double xmin = x.empty() ? 0.0 : x.front(), xmax = x.empty() ? 1.0 : x.back();
    double ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
    if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    if (xmax <= xmin) xmax = xmin + 1.0;
    auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return T + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::string s = detail::header(W, H);
    s += detail::text(W / 2.0, 22, title);
    s += "<rect x=\"" + std::to_string(L) + "\" y=\"" + std::to_string(T) + "\" width=\"" + detail::num(pw) +
         "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
        s += detail::text(px(xv), T + ph + 16, detail::tick(xv));
        s += detail::text(L - 6, py(yv) + 4, detail::tick(yv), "end");
    }
    s += detail::text(L + pw / 2, H - 12, xlabel);
    s += "<text x=\"16\" y=\"" + detail::num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::num(T + ph / 2) + ")\">" + detail::escape(ylabel) + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* colour = detail::kPalette[k % detail::kPalette.size()];
        std::string pts;
        for (std::size_t i = 0; i < x.size() && i < series[k].y.size(); ++i) {
            if (!std::isfinite(series[k].y[i])) continue;
            pts += detail::num(px(x[i])) + "," + detail::num(py(series[k].y[i])) + " ";
        }
        if (!pts.empty()) pts.pop_back();
        s += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
        const double ly = T + 14.0 + 16.0 * static_cast<double>(k);
        s += "<line x1=\"" + std::to_string(W - R + 10) + "\" y1=\"" + detail::num(ly - 4) + "\" x2=\"" +
             std::to_string(W - R + 30) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + colour +
             "\" stroke-width=\"2\"/>\n";
        s += detail::text(W - R + 36, ly, series[k].name, "start");
    }
    s += "</svg>\n";
    return s;
}

/// Heatmap of a row-major rows x cols matrix; rows run along x, columns along y.
inline std::string heatmap(std::span<const double> values, std::size_t rows, std::size_t cols,
                           std::span<const double> xvals, std::span<const double> yvals, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel) {
    constexpr int W = 720, H = 440, L = 70, R = 90, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    double vmin = INFINITY, vmax = -INFINITY;
    for (double v : values)
        if (std::isfinite(v)) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    if (!std::isfinite(vmin)) vmin = 0.0, vmax = 1.0;
    if (vmax <= vmin) vmax = vmin + 1.0;
    const double cw = pw / static_cast<double>(std::max<std::size_t>(rows, 1));
    const double ch = ph / static_cast<double>(std::max<std::size_t>(cols, 1));

    std::string s = detail::header(W, H);
    s += detail::text(W / 2.0, 22, title);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double t = (values[i * cols + j] - vmin) / (vmax - vmin);
            s += "<rect x=\"" + detail::num(L + cw * static_cast<double>(i)) + "\" y=\"" +
                 detail::num(T + ph - ch * static_cast<double>(j + 1)) + "\" width=\"" + detail::num(cw + 0.05) +
                 "\" height=\"" + detail::num(ch + 0.05) + "\" fill=\"" + detail::ramp(t) + "\"/>\n";
        }
    s += "<rect x=\"" + std::to_string(L) + "\" y=\"" + std::to_string(T) + "\" width=\"" + detail::num(pw) +
         "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    if (!xvals.empty())
        for (int k = 0; k <= 4; ++k) {
            const std::size_t i = (xvals.size() - 1) * static_cast<std::size_t>(k) / 4;
            s += detail::text(L + cw * (static_cast<double>(i) + 0.5), T + ph + 16, detail::tick(xvals[i]));
        }
    if (!yvals.empty())
        for (int k = 0; k <= 4; ++k) {
            const std::size_t j = (yvals.size() - 1) * static_cast<std::size_t>(k) / 4;
            s += detail::text(L - 6, T + ph - ch * (static_cast<double>(j) + 0.5) + 4, detail::tick(yvals[j]), "end");
        }
    s += detail::text(L + pw / 2, H - 12, xlabel);
    s += "<text x=\"16\" y=\"" + detail::num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::num(T + ph / 2) + ")\">" + detail::escape(ylabel) + "</text>\n";
    for (int k = 0; k < 20; ++k) {
        const double y0 = T + ph - ph * (k + 1) / 20.0;
        s += "<rect x=\"" + std::to_string(W - R + 20) + "\" y=\"" + detail::num(y0) + "\" width=\"16\" height=\"" +
             detail::num(ph / 20.0 + 0.05) + "\" fill=\"" + detail::ramp((k + 0.5) / 20.0) + "\"/>\n";
    }
    s += detail::text(W - R + 42, T + 8, detail::tick(vmax), "start");
    s += detail::text(W - R + 42, T + ph, detail::tick(vmin), "start");
    s += "</svg>\n";
    return s;
}

}  // namespace ahp::svg
