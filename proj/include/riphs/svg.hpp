#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "riphs/errors.hpp"

namespace riphs {

// Minimal self-contained SVG line plot. No external CSS or scripts, so the
// output renders anywhere an .svg file does.
class LinePlot {
public:
    LinePlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_series(std::string name, std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size()) {
            throw DimensionMismatch("LinePlot: series x/y length mismatch");
        }
        series_.push_back({std::move(name), std::move(xs), std::move(ys), false, 0.0});
    }

    // Horizontal dashed marker line, e.g. a turnpike level for a component.
    void add_hline(std::string name, double y) {
        series_.push_back({std::move(name), {}, {}, true, y});
    }

    std::string render(int width = 860, int height = 480) const {
        const double ml = 64, mr = 160, mt = 40, mb = 48;
        const double pw = width - ml - mr;
        const double ph = height - mt - mb;

        double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
        double y_lo = x_lo, y_hi = -x_lo;
        for (const Series& s : series_) {
            if (s.hline) {
                y_lo = std::min(y_lo, s.level);
                y_hi = std::max(y_hi, s.level);
                continue;
            }
            for (double v : s.xs) {
                x_lo = std::min(x_lo, v);
                x_hi = std::max(x_hi, v);
            }
            for (double v : s.ys) {
                y_lo = std::min(y_lo, v);
                y_hi = std::max(y_hi, v);
            }
        }
        if (!std::isfinite(x_lo) || !std::isfinite(y_lo)) {
            throw Error("LinePlot: nothing to plot");
        }
        if (x_hi <= x_lo) {
            x_hi = x_lo + 1.0;
        }
        if (y_hi <= y_lo) {
            y_hi = y_lo + 1.0;
        }
        const double y_pad = 0.05 * (y_hi - y_lo);
        y_lo -= y_pad;
        y_hi += y_pad;

        auto px = [&](double x) { return ml + pw * (x - x_lo) / (x_hi - x_lo); };
        auto py = [&](double y) { return mt + ph * (1.0 - (y - y_lo) / (y_hi - y_lo)); };

        std::string svg;
        svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
               "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
               std::to_string(width) + " " + std::to_string(height) + "\">\n";
        svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
        svg += "<text x=\"" + fmt(width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" font-size=\"15\" fill=\"#222\">" +
               escape(title_) + "</text>\n";

        for (double t : ticks(x_lo, x_hi)) {
            const double gx = px(t);
            svg += "<line x1=\"" + fmt(gx) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(gx) +
                   "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
            svg += "<text x=\"" + fmt(gx) + "\" y=\"" + fmt(mt + ph + 18) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
                   "fill=\"#444\">" + fmt_tick(t) + "</text>\n";
        }
        for (double t : ticks(y_lo, y_hi)) {
            const double gy = py(t);
            svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(gy) + "\" x2=\"" + fmt(ml + pw) +
                   "\" y2=\"" + fmt(gy) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
            svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(gy + 4) +
                   "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
                   "fill=\"#444\">" + fmt_tick(t) + "</text>\n";
        }
        svg += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" + fmt(pw) +
               "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(ml + pw / 2.0) + "\" y=\"" + fmt(height - 10.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "fill=\"#222\">" + escape(x_label_) + "</text>\n";
        svg += "<text x=\"18\" y=\"" + fmt(mt + ph / 2.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "fill=\"#222\" transform=\"rotate(-90 18 " + fmt(mt + ph / 2.0) + ")\">" +
               escape(y_label_) + "</text>\n";

        int color_index = 0;
        double legend_y = mt + 14;
        for (const Series& s : series_) {
            const std::string color = palette(color_index++);
            if (s.hline) {
                const double gy = py(s.level);
                svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(gy) + "\" x2=\"" + fmt(ml + pw) +
                       "\" y2=\"" + fmt(gy) + "\" stroke=\"" + color +
                       "\" stroke-width=\"1.4\" stroke-dasharray=\"6 4\"/>\n";
            } else if (!s.xs.empty()) {
                std::string pts;
                for (size_t i = 0; i < s.xs.size(); ++i) {
                    if (!pts.empty()) {
                        pts += " ";
                    }
                    pts += fmt(px(s.xs[i])) + "," + fmt(py(s.ys[i]));
                }
                svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
                       "\" stroke-width=\"1.6\"/>\n";
            }
            svg += "<line x1=\"" + fmt(ml + pw + 10) + "\" y1=\"" + fmt(legend_y - 4) +
                   "\" x2=\"" + fmt(ml + pw + 34) + "\" y2=\"" + fmt(legend_y - 4) +
                   "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
                   (s.hline ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
            svg += "<text x=\"" + fmt(ml + pw + 40) + "\" y=\"" + fmt(legend_y) +
                   "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">" +
                   escape(s.name) + "</text>\n";
            legend_y += 16;
        }
        svg += "</svg>\n";
        return svg;
    }

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
        bool hline;
        double level;
    };

    static std::string fmt(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    }

    static std::string fmt_tick(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            switch (c) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                default: out += c;
            }
        }
        return out;
    }

    static std::string palette(int i) {
        static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                       "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
        return colors[i % 8];
    }

    // Round tick spacing to a 1-2-5 ladder so labels stay readable.
    static std::vector<double> ticks(double lo, double hi) {
        const double span = hi - lo;
        const double raw = span / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        const double norm = raw / mag;
        double step = mag;
        if (norm > 5.0) {
            step = 10.0 * mag;
        } else if (norm > 2.0) {
            step = 5.0 * mag;
        } else if (norm > 1.0) {
            step = 2.0 * mag;
        }
        std::vector<double> out;
        for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
            out.push_back(t);
        }
        return out;
    }

    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<Series> series_;
};

} // namespace riphs
