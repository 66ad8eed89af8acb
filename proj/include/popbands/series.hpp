#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "popbands/errors.hpp"

namespace popbands {

/**
 * An annual real-valued series anchored at a calendar start year. The value
 * at index i belongs to year start_year + i. Units depend on the role:
 * persons, persons/km^2, or dimensionless residuals.
 *
 * Immutable after construction; construction validates that the series is
 * non-empty and every value is finite.
 */
struct AnnualSeries {
    int start_year = 0;
    std::vector<double> values;

    AnnualSeries(int start, std::vector<double> vals)
        : start_year(start), values(std::move(vals)) {
        if (values.empty()) {
            throw std::invalid_argument("series: a series needs at least one value");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i])) {
                throw std::invalid_argument("series: non-finite value in year " +
                                            std::to_string(year_at(i)));
            }
        }
    }

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] int year_at(std::size_t i) const {
        return start_year + static_cast<int>(i);
    }
    [[nodiscard]] int last_year() const { return year_at(values.size() - 1); }
};

/// d-th difference of a series. The result is shorter by d values and its
/// start year shifts by d; d = 0 is the identity.
[[nodiscard]] inline AnnualSeries difference(const AnnualSeries& series, int d) {
    if (d < 0 || d > 2) {
        throw std::invalid_argument("series: differencing degree must be 0, 1, or 2");
    }
    if (series.size() <= static_cast<std::size_t>(d)) {
        throw insufficient_data_error("series: need more than " + std::to_string(d) +
                                      " observations to difference " + std::to_string(d) +
                                      " time(s)");
    }
    std::vector<double> out = series.values;
    for (int round = 0; round < d; ++round) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return AnnualSeries(series.start_year + d, std::move(out));
}

}  // namespace popbands
