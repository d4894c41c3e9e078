#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "predkit/stats.hpp"

namespace predkit {

struct SvgPoint {
    double x = 0.0, y = 0.0;
    std::size_t group = 0;
};

struct SvgLabeledPoint {
    double x = 0.0, y = 0.0;
    std::string name;
};

// One correlation scatter: synthetic sets as circles colored by group, real
// sets as labeled crosses, plus the fitted line over the synthetic x-range.
struct ScatterSpec {
    std::string x_label;
    std::string y_label = "accuracy";
    std::vector<std::string> group_names;
    std::vector<SvgPoint> synthetic;
    std::vector<SvgLabeledPoint> real;
    std::optional<LineFit> line;
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

inline std::string tick_num(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
    return std::string(buf, res.ptr);
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

}  // namespace detail

// Renders a deterministic 800x600 scatter plot; identical specs produce
// byte-identical SVG.
inline std::string render_scatter_svg(const ScatterSpec& spec) {
    constexpr double kWidth = 800.0, kHeight = 600.0;
    constexpr double kLeft = 70.0, kRight = 175.0, kTop = 30.0, kBottom = 60.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    auto grow = [&](double x, double y) {
        if (first) {
            xmin = xmax = x;
            ymin = ymax = y;
            first = false;
        } else {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    };
    for (const auto& p : spec.synthetic) grow(p.x, p.y);
    for (const auto& p : spec.real) grow(p.x, p.y);
    double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    if (xpad == 0.0) xpad = 0.5;
    if (ypad == 0.0) ypad = 0.5;
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";

    // Axes and ticks.
    s += "<g stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + detail::svg_num(kLeft) + "\" y1=\"" + detail::svg_num(kTop + plot_h) +
         "\" x2=\"" + detail::svg_num(kLeft + plot_w) + "\" y2=\"" + detail::svg_num(kTop + plot_h) + "\"/>\n";
    s += "<line x1=\"" + detail::svg_num(kLeft) + "\" y1=\"" + detail::svg_num(kTop) +
         "\" x2=\"" + detail::svg_num(kLeft) + "\" y2=\"" + detail::svg_num(kTop + plot_h) + "\"/>\n";
    s += "</g>\n";

    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double fx = xmin + (xmax - xmin) * t / kTicks;
        const double fy = ymin + (ymax - ymin) * t / kTicks;
        const double tx = px(fx), ty = py(fy);
        s += "<line x1=\"" + detail::svg_num(tx) + "\" y1=\"" + detail::svg_num(kTop + plot_h) +
             "\" x2=\"" + detail::svg_num(tx) + "\" y2=\"" + detail::svg_num(kTop + plot_h + 5) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + detail::svg_num(tx) + "\" y=\"" + detail::svg_num(kTop + plot_h + 18) +
             "\" font-size=\"11\" text-anchor=\"middle\">" + detail::tick_num(fx) + "</text>\n";
        s += "<line x1=\"" + detail::svg_num(kLeft - 5) + "\" y1=\"" + detail::svg_num(ty) +
             "\" x2=\"" + detail::svg_num(kLeft) + "\" y2=\"" + detail::svg_num(ty) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + detail::svg_num(kLeft - 8) + "\" y=\"" + detail::svg_num(ty + 4) +
             "\" font-size=\"11\" text-anchor=\"end\">" + detail::tick_num(fy) + "</text>\n";
    }
    s += "<text x=\"" + detail::svg_num(kLeft + plot_w / 2) + "\" y=\"" + detail::svg_num(kHeight - 16) +
         "\" font-size=\"14\" text-anchor=\"middle\">" + spec.x_label + "</text>\n";
    s += "<text x=\"18\" y=\"" + detail::svg_num(kTop + plot_h / 2) +
         "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         detail::svg_num(kTop + plot_h / 2) + ")\">" + spec.y_label + "</text>\n";

    // Fitted line across the synthetic x-range, clipped to the plot box.
    if (spec.line && !spec.synthetic.empty()) {
        double lx0 = spec.synthetic.front().x, lx1 = lx0;
        for (const auto& p : spec.synthetic) {
            lx0 = std::min(lx0, p.x);
            lx1 = std::max(lx1, p.x);
        }
        double t0 = 0.0, t1 = 1.0;
        const double y0 = spec.line->slope * lx0 + spec.line->intercept;
        const double y1 = spec.line->slope * lx1 + spec.line->intercept;
        const double dy = y1 - y0;
        // Clip parametrically against the y bounds.
        auto clip = [&](double p, double q) {
            if (p == 0.0) return q >= 0.0;
            const double r = q / p;
            if (p < 0.0) {
                if (r > t1) return false;
                t0 = std::max(t0, r);
            } else {
                if (r < t0) return false;
                t1 = std::min(t1, r);
            }
            return true;
        };
        if (clip(-dy, y0 - ymin) && clip(dy, ymax - y0) && t0 < t1) {
            const double ax = lx0 + t0 * (lx1 - lx0), ay = y0 + t0 * dy;
            const double bx = lx0 + t1 * (lx1 - lx0), by = y0 + t1 * dy;
            s += "<line x1=\"" + detail::svg_num(px(ax)) + "\" y1=\"" + detail::svg_num(py(ay)) +
                 "\" x2=\"" + detail::svg_num(px(bx)) + "\" y2=\"" + detail::svg_num(py(by)) +
                 "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
        }
    }

    for (const auto& p : spec.synthetic) {
        s += "<circle cx=\"" + detail::svg_num(px(p.x)) + "\" cy=\"" + detail::svg_num(py(p.y)) +
             "\" r=\"4\" fill=\"" + detail::palette(p.group) + "\" fill-opacity=\"0.8\"/>\n";
    }
    for (const auto& p : spec.real) {
        const double cx = px(p.x), cy = py(p.y);
        s += "<path d=\"M " + detail::svg_num(cx - 5) + " " + detail::svg_num(cy - 5) + " L " +
             detail::svg_num(cx + 5) + " " + detail::svg_num(cy + 5) + " M " +
             detail::svg_num(cx - 5) + " " + detail::svg_num(cy + 5) + " L " +
             detail::svg_num(cx + 5) + " " + detail::svg_num(cy - 5) +
             "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + detail::svg_num(cx + 8) + "\" y=\"" + detail::svg_num(cy - 6) +
             "\" font-size=\"11\">" + p.name + "</text>\n";
    }

    // Legend.
    double ly = kTop + 10;
    const double lx = kLeft + plot_w + 18;
    for (std::size_t g = 0; g < spec.group_names.size(); ++g) {
        s += "<circle cx=\"" + detail::svg_num(lx) + "\" cy=\"" + detail::svg_num(ly - 4) +
             "\" r=\"4\" fill=\"" + detail::palette(g) + "\"/>\n";
        s += "<text x=\"" + detail::svg_num(lx + 10) + "\" y=\"" + detail::svg_num(ly) +
             "\" font-size=\"12\">" + spec.group_names[g] + "</text>\n";
        ly += 18;
    }
    if (!spec.real.empty()) {
        s += "<path d=\"M " + detail::svg_num(lx - 4) + " " + detail::svg_num(ly - 8) + " L " +
             detail::svg_num(lx + 4) + " " + detail::svg_num(ly) + " M " + detail::svg_num(lx - 4) +
             " " + detail::svg_num(ly) + " L " + detail::svg_num(lx + 4) + " " +
             detail::svg_num(ly - 8) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + detail::svg_num(lx + 10) + "\" y=\"" + detail::svg_num(ly) +
             "\" font-size=\"12\">real sets</text>\n";
    }

    s += "</svg>\n";
    return s;
}

}  // namespace predkit
