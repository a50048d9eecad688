#pragma once

// Minimal deterministic line-plot rendering. The CSV files are the canonical
// artifacts; these plots exist so a run can be eyeballed without external
// tooling. No dependencies, fixed layout, text output identical across runs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "noiselock/common.hpp"

namespace noiselock::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool logx = false;
    bool logy = false;
    int width = 880;
    int height = 540;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// Tick positions at a 1/2/5 progression covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
    std::vector<double> out;
    const double range = hi - lo;
    if (!(range > 0.0) || !std::isfinite(range)) return out;
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    }
    for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * range; t += step) {
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return out;
}

}  // namespace detail

inline void write_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                       const PlotOptions& opt) {
    static const char* kColors[] = {"#1f6fb4", "#d1495b", "#2e8b57",
                                    "#8a5cb8", "#c98a00", "#445566"};
    const int ml = 80, mr = 24, mt = 42, mb = 56;
    const double pw = opt.width - ml - mr;
    const double ph = opt.height - mt - mb;

    const auto tx = [&](double v) { return opt.logx ? std::log10(v) : v; };
    const auto ty = [&](double v) { return opt.logy ? std::log10(v) : v; };

    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool any = false;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (opt.logx && !(s.x[i] > 0.0)) continue;
            if (opt.logy && !(s.y[i] > 0.0)) continue;
            const double x = tx(s.x[i]), y = ty(s.y[i]);
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (!any) {
                xmin = xmax = x;
                ymin = ymax = y;
                any = true;
            } else {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (!any) {
        xmin = ymin = 0.0;
        xmax = ymax = 1.0;
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double ypad = 0.06 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ofstream out(path);
    require(out.good(), "write_plot: cannot open " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
        << opt.height << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << opt.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << opt.title << "</text>\n";

    // Gridlines and tick labels.
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
    for (double t : detail::ticks(xmin, xmax)) {
        const double X = px(t);
        out << "<line x1=\"" << detail::fmt(X, "%.2f") << "\" y1=\"" << mt << "\" x2=\""
            << detail::fmt(X, "%.2f") << "\" y2=\"" << mt + ph
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        const double label = opt.logx ? std::pow(10.0, t) : t;
        out << "<text x=\"" << detail::fmt(X, "%.2f") << "\" y=\"" << mt + ph + 18
            << "\" text-anchor=\"middle\">" << detail::fmt(label) << "</text>\n";
    }
    for (double t : detail::ticks(ymin, ymax)) {
        const double Y = py(t);
        out << "<line x1=\"" << ml << "\" y1=\"" << detail::fmt(Y, "%.2f") << "\" x2=\""
            << ml + pw << "\" y2=\"" << detail::fmt(Y, "%.2f")
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        const double label = opt.logy ? std::pow(10.0, t) : t;
        out << "<text x=\"" << ml - 8 << "\" y=\"" << detail::fmt(Y + 4, "%.2f")
            << "\" text-anchor=\"end\">" << detail::fmt(label) << "</text>\n";
    }
    out << "</g>\n";

    // Axes frame and labels.
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << detail::fmt(pw, "%.2f")
        << "\" height=\"" << detail::fmt(ph, "%.2f")
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opt.height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << opt.xlabel
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 20 " << mt + ph / 2 << ")\">" << opt.ylabel << "</text>\n";

    // Data polylines; non-finite or non-positive (log) samples split the line.
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
        std::string pts;
        const auto flush = [&]() {
            if (!pts.empty()) {
                out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.6\" points=\"" << pts << "\"/>\n";
                pts.clear();
            }
        };
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if ((opt.logx && !(s.x[i] > 0.0)) || (opt.logy && !(s.y[i] > 0.0))) {
                flush();
                continue;
            }
            const double x = tx(s.x[i]), y = ty(s.y[i]);
            if (!std::isfinite(x) || !std::isfinite(y)) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += " ";
            pts += detail::fmt(px(x), "%.2f");
            pts += ",";
            pts += detail::fmt(py(y), "%.2f");
        }
        flush();
        out << "<text x=\"" << ml + pw - 10 << "\" y=\"" << mt + 18 + 16 * si
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
            << color << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    require(out.good(), "write_plot: write failed for " + path.string());
}

}  // namespace noiselock::svg
