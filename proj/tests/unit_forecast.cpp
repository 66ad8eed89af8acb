#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "popbands/arima.hpp"

#include "helpers.hpp"

using namespace popbands;

namespace {

const std::vector<int> kOneTwo{1, 2};
const std::vector<double> kLevel95{0.95};

ArimaFit hand_fit() {
    // Differences of {10, 11, 12.5} are {1, 1.5}; with phi = 0.5 the forecast
    // increments are 0.75 and 0.375, so the means are 13.25 and 13.625.
    const AnnualSeries s(2000, {10.0, 11.0, 12.5});
    return fit_from_parameters(s, ArimaOrder{1, 1, 0}, {0.5}, {}, 1.0);
}

}  // namespace

TEST_CASE("point forecasts integrate the differenced recursion") {
    const ArimaFit fit = hand_fit();
    const std::vector<ForecastBand> bands = forecast(fit, 2002, kOneTwo, kLevel95);
    REQUIRE(bands.size() == 2);
    CHECK(bands[0].year == 2003);
    CHECK(bands[0].horizon == 1);
    CHECK(bands[0].mean == Catch::Approx(13.25).margin(1e-12));
    CHECK(bands[1].year == 2004);
    CHECK(bands[1].mean == Catch::Approx(13.625).margin(1e-12));
}

TEST_CASE("forecast standard errors follow the psi partial sums") {
    const ArimaFit fit = hand_fit();
    // psi weights of the integrated AR(1) with phi = 0.5: 1, 1.5, 1.75, ...
    SECTION("without the extra variance lag") {
        const std::vector<ForecastBand> bands = forecast(fit, 2002, kOneTwo, kLevel95, 0);
        CHECK(bands[0].se == Catch::Approx(1.0).margin(1e-12));
        CHECK(bands[1].se == Catch::Approx(std::sqrt(1.0 + 2.25)).margin(1e-12));
    }
    SECTION("with the extra variance lag the sum gains one term") {
        const std::vector<ForecastBand> bands = forecast(fit, 2002, kOneTwo, kLevel95, 1);
        CHECK(bands[0].se == Catch::Approx(std::sqrt(1.0 + 2.25)).margin(1e-12));
        CHECK(bands[1].se == Catch::Approx(std::sqrt(1.0 + 2.25 + 3.0625)).margin(1e-12));
    }
}

TEST_CASE("interval bounds are Gaussian and symmetric about the mean") {
    const ArimaFit fit = hand_fit();
    const std::vector<ForecastBand> bands = forecast(fit, 2002, kOneTwo, kLevel95);
    for (const ForecastBand& b : bands) {
        const auto [lo, hi] = b.interval(0.95);
        CHECK(hi - b.mean == Catch::Approx(1.959963984540 * b.se).epsilon(1e-9));
        CHECK(std::fabs((b.mean - lo) - (hi - b.mean)) < 1e-12);
        CHECK_THROWS_AS(b.interval(0.5), std::invalid_argument);
    }
}

TEST_CASE("a fitted trend is added back onto the forecast mean") {
    const AnnualSeries base(2000, {10.0, 11.0, 12.5});
    TrendModel trend;
    trend.intercept = 5.0;
    trend.slope = 0.1;
    trend.convention = DateConvention::index_from_1;
    trend.start_year = 2000;

    std::vector<double> shifted(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        shifted[i] = base.values[i] + trend.value_at(base.year_at(i));
    }
    const AnnualSeries with_trend(2000, std::move(shifted));

    const ArimaFit plain = fit_from_parameters(base, ArimaOrder{1, 1, 0}, {0.5}, {}, 1.0);
    const ArimaFit detr =
        fit_from_parameters(with_trend, ArimaOrder{1, 1, 0}, {0.5}, {}, 1.0, trend);
    const std::vector<ForecastBand> b0 = forecast(plain, 2002, kOneTwo, kLevel95);
    const std::vector<ForecastBand> b1 = forecast(detr, 2002, kOneTwo, kLevel95);
    for (std::size_t i = 0; i < b0.size(); ++i) {
        CHECK(b1[i].mean ==
              Catch::Approx(b0[i].mean + trend.value_at(b1[i].year)).margin(1e-10));
        CHECK(b1[i].se == Catch::Approx(b0[i].se).margin(1e-12));
    }
}

TEST_CASE("forecast argument validation") {
    const ArimaFit fit = hand_fit();
    CHECK_THROWS_AS(forecast(fit, 2005, kOneTwo, kLevel95), std::invalid_argument);
    CHECK_THROWS_AS(forecast(fit, 2002, std::vector<int>{0}, kLevel95), std::invalid_argument);
    CHECK_THROWS_AS(forecast(fit, 2002, kOneTwo, std::vector<double>{1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(forecast(fit, 2002, kOneTwo, std::vector<double>{0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(forecast(fit, 2002, kOneTwo, kLevel95, 2), std::invalid_argument);
    CHECK(forecast(fit, 2002, std::vector<int>{}, kLevel95).empty());
}

TEST_CASE("per-level multiplier overrides replace the Gaussian quantile") {
    const ArimaFit fit = hand_fit();
    const std::map<double, double> mult{{0.95, 3.0}};
    const std::vector<ForecastBand> bands = forecast(fit, 2002, kOneTwo, kLevel95, 1, mult);
    for (const ForecastBand& b : bands) {
        const auto [lo, hi] = b.interval(0.95);
        CHECK(hi == Catch::Approx(b.mean + 3.0 * b.se).epsilon(1e-12));
        CHECK(lo == Catch::Approx(b.mean - 3.0 * b.se).epsilon(1e-12));
    }
}

TEST_CASE("non-converged fits refuse to forecast unless overridden") {
    const AnnualSeries s = testutil::integrated_ar1_series(7, 400, 0.8);
    FitOptions opts;
    opts.max_iter = 1;
    const ArimaFit fit = fit_css_lm(s, ArimaOrder{1, 1, 0}, opts);
    REQUIRE_FALSE(fit.converged);
    CHECK_THROWS_AS(forecast(fit, fit.origin_year, kOneTwo, kLevel95), numeric_error);
    const std::vector<ForecastBand> bands =
        forecast(fit, fit.origin_year, kOneTwo, kLevel95, 1, {}, true);
    CHECK(bands.size() == 2);
}

TEST_CASE("narrower levels nest inside wider ones and spread grows with horizon") {
    const AnnualSeries s = testutil::integrated_ar1_series(15, 120, 0.6, 0.5);
    const ArimaFit fit = fit_css_lm(s, ArimaOrder{1, 1, 0});
    REQUIRE(fit.converged);
    std::vector<int> horizons;
    for (int h = 1; h <= 12; ++h) horizons.push_back(h);
    const std::vector<double> levels{0.95, 0.66};
    const std::vector<ForecastBand> bands = forecast(fit, fit.origin_year, horizons, levels);
    double prev_se = 0.0;
    for (const ForecastBand& b : bands) {
        const auto [lo95, hi95] = b.interval(0.95);
        const auto [lo66, hi66] = b.interval(0.66);
        CHECK(lo95 < lo66);
        CHECK(hi66 < hi95);
        CHECK(lo66 < b.mean);
        CHECK(b.mean < hi66);
        CHECK(b.se > prev_se);
        prev_se = b.se;
    }
}
