#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "popbands/arima.hpp"
#include "popbands/errors.hpp"
#include "popbands/series.hpp"

namespace popbands {

/// An annual density series along with the (constant) land area that turns
/// densities back into population counts.
struct DensitySeries {
    AnnualSeries series{0, {1.0}};  ///< persons per km^2
    double land_area_km2 = 0.0;

    /// Inverts the density construction: persons in year index i.
    [[nodiscard]] double population_at(std::size_t i) const {
        return series.values[i] * land_area_km2;
    }
};

/// Converts a population-count series into densities for the modeling step.
/// The area is kept so the division stays invertible.
[[nodiscard]] inline DensitySeries to_density(const AnnualSeries& counts, double land_area_km2) {
    if (!(land_area_km2 > 0.0)) {
        throw std::invalid_argument("bridge: land area must be positive");
    }
    for (double v : counts.values) {
        if (v < 0.0) throw std::invalid_argument("bridge: populations must be nonnegative");
    }
    std::vector<double> dens(counts.values.size());
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = counts.values[i] / land_area_km2;
    return DensitySeries{AnnualSeries(counts.start_year, std::move(dens)), land_area_km2};
}

/// Interval width relative to the interval's own mean:
/// r = (bound - mean) / mean, so r_lower <= 0 <= r_upper for positive means.
struct RelativeWidths {
    int year = 0;
    double level = 0.0;
    double mean = 0.0;
    double r_lower = 0.0;
    double r_upper = 0.0;
};

[[nodiscard]] inline RelativeWidths relative_widths(const ForecastBand& band, double level) {
    if (!(band.mean > 0.0)) {
        throw degenerate_series_error("bridge: relative widths require a positive mean");
    }
    const auto [lower, upper] = band.interval(level);
    RelativeWidths rw;
    rw.year = band.year;
    rw.level = level;
    rw.mean = band.mean;
    rw.r_lower = (lower - band.mean) / band.mean;
    rw.r_upper = (upper - band.mean) / band.mean;
    return rw;
}

/// An external point forecast wrapped in translated bounds, rounded to
/// whole persons.
struct TranslatedBand {
    int year = 0;
    double level = 0.0;
    double point = 0.0;
    long long lower = 0;
    long long upper = 0;
};

/// Applies relative widths from the density model to an external point
/// forecast for the same year: bound = round(point * (1 + r)).
[[nodiscard]] inline TranslatedBand translate(const RelativeWidths& widths, double point) {
    if (!(point > 0.0) || !std::isfinite(point)) {
        throw std::invalid_argument("bridge: point forecast must be finite and positive");
    }
    TranslatedBand out;
    out.year = widths.year;
    out.level = widths.level;
    out.point = point;
    out.lower = std::llround(point * (1.0 + widths.r_lower));
    out.upper = std::llround(point * (1.0 + widths.r_upper));
    return out;
}

/// A year with an externally produced population point forecast.
struct PointForecast {
    int year = 0;
    double value = 0.0;
};

/// Everything the reporting layer needs for one target year and level.
struct ReportRow {
    int year = 0;
    int horizon = 0;
    double level = 0.0;
    double mean_density = 0.0;
    double se = 0.0;
    double density_lower = 0.0;
    double density_upper = 0.0;
    double r_lower = 0.0;
    double r_upper = 0.0;
    bool has_point = false;
    double point = 0.0;
    long long translated_lower = 0;
    long long translated_upper = 0;
};

/**
 * Joins density forecast bands with external point forecasts into report
 * rows, ordered by year ascending and confidence level descending. Every
 * point forecast year must have a matching band; bands without a point
 * forecast keep their density columns and leave the translation empty.
 */
[[nodiscard]] inline std::vector<ReportRow> build_report_rows(
    std::span<const ForecastBand> bands, std::span<const PointForecast> points) {
    std::map<int, double> point_by_year;
    for (const auto& pf : points) {
        if (!point_by_year.emplace(pf.year, pf.value).second) {
            throw data_error("bridge: duplicate point forecast for year " +
                             std::to_string(pf.year));
        }
    }
    for (const auto& [year, value] : point_by_year) {
        const bool found = std::any_of(bands.begin(), bands.end(),
                                       [year](const ForecastBand& b) { return b.year == year; });
        if (!found) {
            throw data_error("bridge: no forecast band covers point forecast year " +
                             std::to_string(year));
        }
    }

    std::vector<const ForecastBand*> ordered;
    ordered.reserve(bands.size());
    for (const auto& b : bands) ordered.push_back(&b);
    std::sort(ordered.begin(), ordered.end(),
              [](const ForecastBand* a, const ForecastBand* b) { return a->year < b->year; });

    std::vector<ReportRow> rows;
    for (const ForecastBand* band : ordered) {
        std::vector<double> levels;
        for (const auto& [lv, bounds] : band->intervals) levels.push_back(lv);
        std::sort(levels.rbegin(), levels.rend());
        for (double lv : levels) {
            const RelativeWidths rw = relative_widths(*band, lv);
            ReportRow row;
            row.year = band->year;
            row.horizon = band->horizon;
            row.level = lv;
            row.mean_density = band->mean;
            row.se = band->se;
            const auto [lower, upper] = band->interval(lv);
            row.density_lower = lower;
            row.density_upper = upper;
            row.r_lower = rw.r_lower;
            row.r_upper = rw.r_upper;
            const auto it = point_by_year.find(band->year);
            if (it != point_by_year.end()) {
                const TranslatedBand tb = translate(rw, it->second);
                row.has_point = true;
                row.point = it->second;
                row.translated_lower = tb.lower;
                row.translated_upper = tb.upper;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace popbands
