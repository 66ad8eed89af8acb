#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "popbands/arima.hpp"
#include "popbands/errors.hpp"
#include "popbands/series.hpp"

namespace popbands {

namespace detail {

[[nodiscard]] inline std::string fmt_fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

[[nodiscard]] inline std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Rounds a raw interval up to a 1/2/5 x 10^k "nice" tick step.
[[nodiscard]] inline double nice_step(double raw) {
    if (!(raw > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double unit = raw / mag;
    if (unit <= 1.0) return mag;
    if (unit <= 2.0) return 2.0 * mag;
    if (unit <= 5.0) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace detail

/**
 * Renders the observed series, the forecast mean path, and one shaded
 * polygon per confidence level into a standalone SVG string. Wider bands
 * are drawn first so narrower ones stay visible; each band polygon walks
 * the upper bounds left to right and the lower bounds back, giving exactly
 * two vertices per forecast year. Output depends only on the inputs, so
 * repeated runs produce identical bytes.
 */
[[nodiscard]] inline std::string emit_fanchart_svg(const AnnualSeries& history,
                                                   std::span<const ForecastBand> bands,
                                                   std::span<const double> levels,
                                                   const std::string& title = {}) {
    if (bands.empty()) throw std::invalid_argument("svg: need at least one forecast band");
    if (levels.empty()) throw std::invalid_argument("svg: need at least one confidence level");

    std::vector<const ForecastBand*> ordered;
    ordered.reserve(bands.size());
    for (const auto& b : bands) ordered.push_back(&b);
    std::sort(ordered.begin(), ordered.end(),
              [](const ForecastBand* a, const ForecastBand* b) { return a->year < b->year; });

    const int x_min = history.start_year;
    const int x_max = ordered.back()->year;
    double y_min = history.values[0], y_max = history.values[0];
    for (double v : history.values) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    }
    for (const ForecastBand* b : ordered) {
        for (double lv : levels) {
            const auto [lower, upper] = b->interval(lv);  // throws if a level is missing
            y_min = std::min(y_min, lower);
            y_max = std::max(y_max, upper);
        }
    }
    const double pad = std::max((y_max - y_min) * 0.05, 1e-9);
    y_min -= pad;
    y_max += pad;

    constexpr double kWidth = 960.0, kHeight = 540.0;
    constexpr double kLeft = 70.0, kRight = 930.0, kTop = 40.0, kBottom = 500.0;
    const auto sx = [&](double year) {
        return x_max == x_min
                   ? (kLeft + kRight) / 2.0
                   : kLeft + (year - x_min) / static_cast<double>(x_max - x_min) * (kRight - kLeft);
    };
    const auto sy = [&](double v) {
        return kBottom - (v - y_min) / (y_max - y_min) * (kBottom - kTop);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
           detail::fmt_fixed(kWidth, 0) + " " + detail::fmt_fixed(kHeight, 0) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + detail::fmt_fixed(kWidth, 0) + "\" height=\"" +
           detail::fmt_fixed(kHeight, 0) + "\" fill=\"#ffffff\"/>\n";
    if (!title.empty()) {
        svg += "<text x=\"480\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">" +
               detail::xml_escape(title) + "</text>\n";
    }

    // Axes and ticks.
    svg += "<line x1=\"" + detail::fmt_fixed(kLeft) + "\" y1=\"" + detail::fmt_fixed(kBottom) +
           "\" x2=\"" + detail::fmt_fixed(kRight) + "\" y2=\"" + detail::fmt_fixed(kBottom) +
           "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + detail::fmt_fixed(kLeft) + "\" y1=\"" + detail::fmt_fixed(kTop) +
           "\" x2=\"" + detail::fmt_fixed(kLeft) + "\" y2=\"" + detail::fmt_fixed(kBottom) +
           "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    {
        const double x_step = detail::nice_step((x_max - x_min) / 10.0);
        const double first = std::ceil(x_min / x_step) * x_step;
        for (double year = first; year <= x_max + 1e-9; year += x_step) {
            const double px = sx(year);
            svg += "<line x1=\"" + detail::fmt_fixed(px) + "\" y1=\"" +
                   detail::fmt_fixed(kBottom) + "\" x2=\"" + detail::fmt_fixed(px) + "\" y2=\"" +
                   detail::fmt_fixed(kBottom + 5.0) + "\" stroke=\"#333333\"/>\n";
            svg += "<text x=\"" + detail::fmt_fixed(px) + "\" y=\"" +
                   detail::fmt_fixed(kBottom + 20.0) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
                   detail::fmt_fixed(year, 0) + "</text>\n";
        }
        const double y_step = detail::nice_step((y_max - y_min) / 6.0);
        const double first_y = std::ceil(y_min / y_step) * y_step;
        for (double v = first_y; v <= y_max + 1e-9; v += y_step) {
            const double py = sy(v);
            svg += "<line x1=\"" + detail::fmt_fixed(kLeft - 5.0) + "\" y1=\"" +
                   detail::fmt_fixed(py) + "\" x2=\"" + detail::fmt_fixed(kLeft) + "\" y2=\"" +
                   detail::fmt_fixed(py) + "\" stroke=\"#333333\"/>\n";
            svg += "<text x=\"" + detail::fmt_fixed(kLeft - 9.0) + "\" y=\"" +
                   detail::fmt_fixed(py + 4.0) +
                   "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
                   detail::fmt_fixed(v, y_step < 1.0 ? 2 : 0) + "</text>\n";
        }
    }

    // Bands, widest first so narrow ones remain visible on top.
    std::vector<double> by_width(levels.begin(), levels.end());
    const ForecastBand* widest_ref = ordered.back();
    std::sort(by_width.begin(), by_width.end(), [&](double a, double b) {
        const auto ia = widest_ref->interval(a);
        const auto ib = widest_ref->interval(b);
        return (ia.second - ia.first) > (ib.second - ib.first);
    });
    const char* kFills[] = {"#9ecae1", "#4292c6", "#08519c", "#6baed6"};
    for (std::size_t li = 0; li < by_width.size(); ++li) {
        const double lv = by_width[li];
        std::string points;
        for (const ForecastBand* b : ordered) {
            points += detail::fmt_fixed(sx(b->year)) + "," +
                      detail::fmt_fixed(sy(b->interval(lv).second)) + " ";
        }
        for (auto it = ordered.rbegin(); it != ordered.rend(); ++it) {
            points += detail::fmt_fixed(sx((*it)->year)) + "," +
                      detail::fmt_fixed(sy((*it)->interval(lv).first)) + " ";
        }
        points.pop_back();
        svg += "<polygon points=\"" + points + "\" fill=\"" + kFills[li % 4] +
               "\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
        const auto [lo, hi] = ordered.back()->interval(lv);
        svg += "<text x=\"" + detail::fmt_fixed(kRight + 4.0) + "\" y=\"" +
               detail::fmt_fixed(sy(hi) + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555555\">" +
               detail::fmt_fixed(lv * 100.0, 0) + "%</text>\n";
    }

    // Observed history.
    {
        std::string points;
        for (std::size_t i = 0; i < history.size(); ++i) {
            points += detail::fmt_fixed(sx(history.year_at(i))) + "," +
                      detail::fmt_fixed(sy(history.values[i])) + " ";
        }
        points.pop_back();
        svg += "<polyline points=\"" + points +
               "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.5\"/>\n";
    }
    // Forecast mean, connected to the last observation.
    {
        std::string points = detail::fmt_fixed(sx(history.last_year())) + "," +
                             detail::fmt_fixed(sy(history.values.back())) + " ";
        for (const ForecastBand* b : ordered) {
            points += detail::fmt_fixed(sx(b->year)) + "," + detail::fmt_fixed(sy(b->mean)) + " ";
        }
        points.pop_back();
        svg += "<polyline points=\"" + points +
               "\" fill=\"none\" stroke=\"#c02020\" stroke-width=\"1.5\" "
               "stroke-dasharray=\"6 3\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace popbands
