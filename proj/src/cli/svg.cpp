#include "mixgen/cli.hpp"

#include "mixgen/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixgen::cli {

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<double>& x, const std::vector<Series>& series) {
    if (x.empty()) throw ValidationError("plot needs at least one x value");
    double x_lo = *std::min_element(x.begin(), x.end());
    double x_hi = *std::max_element(x.begin(), x.end());
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (const Series& s : series) {
        if (s.y.size() != x.size()) throw ValidationError("plot series '" + s.name + "' length mismatch");
        for (double v : s.y) {
            if (!std::isfinite(v)) continue;
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (!std::isfinite(y_lo)) y_lo = 0.0, y_hi = 1.0;
    y_lo = std::min(y_lo, 0.0);
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double v) { return kLeft + (v - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double v) { return kTop + (1.0 - (v - y_lo) / (y_hi - y_lo)) * ph; };

    std::string svg;
    svg += fmt::format("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                       "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                       "viewBox=\"0 0 {0} {1}\">\n",
                       kWidth, kHeight);
    svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       kLeft + pw / 2.0, escape_xml(title));

    // Axes and ticks.
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n",
                       kLeft, kTop + ph, kLeft + pw);
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                       kLeft, kTop, kTop + ph);
    for (int i = 0; i <= 4; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
        const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                           "text-anchor=\"middle\">{:.4g}</text>\n",
                           sx(xv), kTop + ph + 16.0, xv);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                           "text-anchor=\"end\">{:.4g}</text>\n",
                           kLeft - 6.0, sy(yv) + 4.0, yv);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       kLeft + pw / 2.0, kHeight - 12.0, escape_xml(x_label));
    svg += fmt::format("<text x=\"16\" y=\"{0:.1f}\" font-family=\"sans-serif\" font-size=\"12\" "
                       "text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}</text>\n",
                       kTop + ph / 2.0, escape_xml(y_label));

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kColors[k % std::size(kColors)];
        std::string points;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(series[k].y[i])) continue;
            if (!points.empty()) points += ' ';
            points += fmt::format("{:.2f},{:.2f}", sx(x[i]), sy(series[k].y[i]));
        }
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color,
                           points);
        const double ly = kTop + 16.0 + 18.0 * double(k);
        svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" "
                           "stroke-width=\"2\"/>\n",
                           kLeft + pw + 12.0, ly, kLeft + pw + 32.0, color);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                           kLeft + pw + 38.0, ly + 4.0, escape_xml(series[k].name));
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace mixgen::cli
