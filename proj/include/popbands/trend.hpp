#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "popbands/errors.hpp"
#include "popbands/mathfn.hpp"
#include "popbands/series.hpp"

namespace popbands {

/// How the trend regressor encodes calendar time. index_from_1 maps the
/// first observation to 1, the second to 2, and so on; calendar_year uses
/// the year itself.
enum class DateConvention { index_from_1, calendar_year };

[[nodiscard]] inline const char* to_string(DateConvention c) {
    return c == DateConvention::index_from_1 ? "index-from-1" : "calendar-year";
}

/// Fitted linear trend. Evaluation at consecutive years always advances by
/// exactly `slope`, whichever date convention was used.
struct TrendModel {
    double intercept = 0.0;
    double slope = 0.0;
    DateConvention convention = DateConvention::index_from_1;
    int start_year = 0;  ///< anchor for index_from_1

    [[nodiscard]] double value_at(int year) const {
        const double x = (convention == DateConvention::index_from_1)
                             ? static_cast<double>(year - start_year + 1)
                             : static_cast<double>(year);
        return intercept + slope * x;
    }
};

/// Ordinary least squares of value on date. Returns the trend and the
/// residual series (observed minus fitted); residuals sum to zero.
[[nodiscard]] inline std::pair<TrendModel, AnnualSeries> fit_trend(
    const AnnualSeries& series, DateConvention convention = DateConvention::index_from_1) {
    const std::size_t n = series.size();
    if (n < 3) {
        throw insufficient_data_error("trend: need at least 3 observations");
    }
    TrendModel model;
    model.convention = convention;
    model.start_year = series.start_year;

    double sx = 0.0, sy = 0.0;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (convention == DateConvention::index_from_1)
                   ? static_cast<double>(i + 1)
                   : static_cast<double>(series.year_at(i));
        sx += x[i];
        sy += series.values[i];
    }
    const double xbar = sx / static_cast<double>(n);
    const double ybar = sy / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - xbar) * (series.values[i] - ybar);
        sxx += (x[i] - xbar) * (x[i] - xbar);
    }
    model.slope = sxy / sxx;
    model.intercept = ybar - model.slope * xbar;

    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) {
        residuals[i] = series.values[i] - (model.intercept + model.slope * x[i]);
    }
    return {model, AnnualSeries(series.start_year, std::move(residuals))};
}

}  // namespace popbands
