#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "popbands/config.hpp"
#include "popbands/csv.hpp"

#include "helpers.hpp"

using namespace popbands;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("series loader accepts both column spellings") {
    testutil::TempDir tmp;
    SECTION("population counts") {
        const std::string p =
            tmp.write("counts.csv", "year,population\n2000,100\n2001,110\n2002,121\n");
        const SeriesCsv got = load_series_csv(p);
        CHECK_FALSE(got.is_density);
        CHECK(got.series.start_year == 2000);
        CHECK(got.series.values == std::vector<double>{100.0, 110.0, 121.0});
    }
    SECTION("densities") {
        const std::string p = tmp.write("dens.csv", "year,density\n1995,25.5\n1996,25.9\n");
        const SeriesCsv got = load_series_csv(p);
        CHECK(got.is_density);
        CHECK(got.series.values == std::vector<double>{25.5, 25.9});
    }
    SECTION("byte order mark, CRLF endings, and blank lines are tolerated") {
        const std::string p = tmp.write(
            "crlf.csv", "\xEF\xBB\xBFyear,density\r\n\r\n2000,1.5\r\n2001,1.75\r\n");
        const SeriesCsv got = load_series_csv(p);
        CHECK(got.series.start_year == 2000);
        CHECK(got.series.values == std::vector<double>{1.5, 1.75});
    }
    SECTION("the real fixture loads") {
        const SeriesCsv got = load_series_csv(testutil::fixture_path(
            "estonia_density_synthetic.csv"));
        CHECK(got.is_density);
        CHECK(got.series.start_year == 1950);
        CHECK(got.series.size() == 74);
        CHECK(got.series.last_year() == 2023);
    }
}

TEST_CASE("series loader rejects malformed files with the offending line") {
    testutil::TempDir tmp;
    const auto expect_error = [&](const std::string& content, const std::string& needle) {
        const std::string p = tmp.write("bad.csv", content);
        CHECK_THROWS_WITH(load_series_csv(p), ContainsSubstring(needle));
    };
    expect_error("year,head\n2000,1\n", "header must be");
    expect_error("year,population\n2000,1,9\n", ":2: expected 2 fields, got 3");
    expect_error("year,population\n20x0,1\n", "expected an integer year");
    expect_error("year,population\n2000,abc\n", "expected a number for the value column");
    expect_error("year,population\n2000,0\n", "series values must be positive");
    expect_error("year,population\n2000,-5\n", "series values must be positive");
    expect_error("year,population\n2000,1\n2002,2\n",
                 "year 2002 breaks the annual sequence (expected 2001)");
    expect_error("year,population\n2001,2\n2000,1\n", "breaks the annual sequence");
    expect_error("", "file is empty");
    expect_error("year,population\n", "no data rows");
    CHECK_THROWS_AS(load_series_csv(tmp.file("missing.csv")), io_error);
}

TEST_CASE("point forecast loader") {
    testutil::TempDir tmp;
    SECTION("years may skip around but must be distinct") {
        const std::string p =
            tmp.write("pts.csv", "year,forecast\n2040,1052590\n2030,1138017\n");
        const std::vector<PointForecast> pts = load_points_csv(p);
        REQUIRE(pts.size() == 2);
        CHECK(pts[0].year == 2040);
        CHECK(pts[0].value == 1052590.0);
        CHECK(pts[1].year == 2030);
    }
    SECTION("a header with no rows is an empty but valid input") {
        const std::string p = tmp.write("empty.csv", "year,forecast\n");
        CHECK(load_points_csv(p).empty());
    }
    SECTION("failure modes") {
        const auto expect_error = [&](const std::string& content, const std::string& needle) {
            const std::string p = tmp.write("bad.csv", content);
            CHECK_THROWS_WITH(load_points_csv(p), ContainsSubstring(needle));
        };
        expect_error("year,value\n", "header must be \"year,forecast\"");
        expect_error("year,forecast\n2030,10\n2030,11\n", "duplicate year 2030");
        expect_error("year,forecast\n2030,0\n", "point forecasts must be positive");
        expect_error("year,forecast\n2030,-4\n", "point forecasts must be positive");
        expect_error("year,forecast\n2030\n", "expected 2 fields");
        expect_error("", "file is empty");
    }
    SECTION("the reference fixture loads") {
        const std::vector<PointForecast> pts =
            load_points_csv(testutil::fixture_path("estonia_points.csv"));
        REQUIRE(pts.size() == 3);
        CHECK(pts[0].year == 2030);
        CHECK(pts[0].value == 1138017.0);
        CHECK(pts[2].value == 970580.0);
    }
}

TEST_CASE("config parser defaults") {
    const PipelineConfig cfg = parse_config_text("series = data.csv\n", "test.conf");
    CHECK(cfg.series_path == "data.csv");
    CHECK(cfg.points_path.empty());
    CHECK(cfg.levels == std::vector<double>{0.95});
    CHECK(cfg.detrend);
    CHECK_FALSE(cfg.allow_nonconverged);
    CHECK(cfg.variance_lag_offset == 1);
    CHECK(cfg.alpha == 0.05);
    CHECK(cfg.limits.max_p == 2);
    CHECK(cfg.limits.max_d == 2);
    CHECK(cfg.limits.max_q == 2);
    CHECK(cfg.diag_lags == 5);
    CHECK(cfg.n_paths == 20000);
    CHECK(cfg.seed == 7861520);
    CHECK_FALSE(cfg.order.has_value());
    CHECK_FALSE(cfg.bypass_requested());
}

TEST_CASE("config parser reads every supported key") {
    const std::string text =
        "# full configuration\n"
        "series = s.csv\n"
        "points = p.csv   # trailing comment\n"
        "land_area_km2 = 42388\n"
        "origin_year = 2023\n"
        "rounding = nearest\n"
        "allow_nonconverged = true\n"
        "levels = 0.95, 0.66\n"
        "target_years = 2050, 2030, 2040\n"
        "horizon = 27\n"
        "order = 1,1,0\n"
        "detrend = false\n"
        "date_convention = calendar_year\n"
        "variance_lag_offset = 0\n"
        "alpha = 0.1\n"
        "max_p = 3\n"
        "max_d = 1\n"
        "max_q = 2\n"
        "diag_lags = 8\n"
        "n_paths = 500\n"
        "seed = 99\n"
        "level_multiplier_66 = 1.05\n";
    const PipelineConfig cfg = parse_config_text(text, "full.conf");
    CHECK(cfg.series_path == "s.csv");
    CHECK(cfg.points_path == "p.csv");
    CHECK(cfg.land_area_km2 == 42388.0);
    CHECK(cfg.origin_year == 2023);
    CHECK(cfg.allow_nonconverged);
    CHECK(cfg.levels == std::vector<double>{0.95, 0.66});
    CHECK(cfg.target_years == std::vector<int>{2030, 2040, 2050});  // sorted
    CHECK(cfg.horizon == 27);
    REQUIRE(cfg.order.has_value());
    CHECK(*cfg.order == (ArimaOrder{1, 1, 0}));
    CHECK_FALSE(cfg.detrend);
    CHECK(cfg.date_convention == DateConvention::calendar_year);
    CHECK(cfg.variance_lag_offset == 0);
    CHECK(cfg.alpha == 0.1);
    CHECK(cfg.limits.max_p == 3);
    CHECK(cfg.limits.max_d == 1);
    CHECK(cfg.diag_lags == 8);
    CHECK(cfg.n_paths == 500);
    CHECK(cfg.seed == 99);
    REQUIRE(cfg.level_multipliers.size() == 1);
    CHECK(cfg.level_multipliers.at(0.66) == 1.05);
}

TEST_CASE("config parser reads the bypass block") {
    const std::string text =
        "series = s.csv\n"
        "origin_year = 2023\n"
        "levels = 0.95\n"
        "bypass_order = 1,1,0\n"
        "bypass_ar = 0.9614962\n"
        "bypass_rmse = 0.08916587\n"
        "bypass_means = 2030:27.1587, 2040:25.9782\n"
        "bypass_bounds_95 = 2030:24.9034:29.4141, 2040:19.6344:32.322\n";
    const PipelineConfig cfg = parse_config_text(text, "bypass.conf");
    REQUIRE(cfg.bypass_requested());
    CHECK(*cfg.bypass_order == (ArimaOrder{1, 1, 0}));
    CHECK(cfg.bypass_ar == std::vector<double>{0.9614962});
    CHECK(cfg.bypass_ma.empty());
    CHECK(cfg.bypass_rmse == 0.08916587);
    CHECK(cfg.bypass_means.at(2030) == 27.1587);
    REQUIRE(cfg.bypass_bounds.contains(0.95));
    CHECK(cfg.bypass_bounds.at(0.95).at(2040).first == 19.6344);
    CHECK(cfg.bypass_bounds.at(0.95).at(2040).second == 32.322);
}

TEST_CASE("config parser failure modes") {
    const auto expect_error = [](const std::string& text, const std::string& needle) {
        CHECK_THROWS_WITH(parse_config_text(text, "t.conf"), ContainsSubstring(needle));
    };
    expect_error("serees = x\n", "t.conf:1: unknown key 'serees'");
    expect_error("series = a\nseries = b\n", "t.conf:2: duplicate key 'series'");
    expect_error("just some text\n", "expected \"key = value\"");
    expect_error("= x\n", "empty key");
    expect_error("alpha = hot\n", "needs a number");
    expect_error("detrend = maybe\n", "true or false");
    expect_error("order = 1,1\n", "p,d,q");
    expect_error("order = 1,3,0\n", "invalid order");
    expect_error("levels = 0.95, 1.5\n", "must lie in (0,1)");
    expect_error("levels = 0.95, 0.95\n", "must be distinct");
    expect_error("levels =\n", "levels must not be empty");
    expect_error("origin_year = 2030\ntarget_years = 2030\n", "not after origin_year");
    expect_error("target_years = 2030, 2030\n", "target_years must be distinct");
    expect_error("horizon = 0\n", "horizon must be positive");
    expect_error("rounding = banker\n", "only rounding = nearest");
    expect_error("variance_lag_offset = 2\n", "must be 0 or 1");
    expect_error("alpha = 0.7\n", "(0, 0.5]");
    expect_error("alpha = 0\n", "(0, 0.5]");
    expect_error("diag_lags = 0\n", "diag_lags must be positive");
    expect_error("n_paths = 0\n", "n_paths must be positive");
    expect_error("seed = abc\n", "unsigned integer");
    expect_error("land_area_km2 = 0\n", "must be positive");
    expect_error("level_multiplier_80 = 1.1\n", "not in 'levels'");
    expect_error("levels = 0.95\nlevel_multiplier_95 = 0\n", "must be positive");
    expect_error("bypass_ar = 0.5\n", "require bypass_order");
    expect_error("bypass_order = 1,0,0\nbypass_rmse = 1\n", "coefficient counts");
    expect_error("bypass_order = 1,0,0\nbypass_ar = 0.5\n", "requires bypass_rmse");
    expect_error(
        "bypass_order = 0,1,0\nbypass_rmse = 1\nbypass_bounds_95 = 2030:1:2\n",
        "need a matching bypass_means entry");
    expect_error(
        "bypass_order = 0,1,0\nbypass_rmse = 1\nbypass_means = 2030:5\n"
        "bypass_bounds_95 = 2030:3:2\n",
        "lower > upper");
    expect_error("bypass_order = 0,1,0\nbypass_rmse = 1\nbypass_means = 2030:5\n"
                 "bypass_bounds_95 = 2030:1\n",
                 "year:lower:upper");
}

TEST_CASE("config loader reads from disk and reports missing files") {
    testutil::TempDir tmp;
    const std::string p = tmp.write("ok.conf", "series = s.csv\nseed = 5\n");
    CHECK(load_config(p).seed == 5);
    CHECK_THROWS_AS(load_config(tmp.file("absent.conf")), io_error);

    const PipelineConfig fixture = load_config(testutil::fixture_path("estonia_bypass.conf"));
    CHECK(fixture.bypass_requested());
    CHECK(fixture.origin_year == 2023);
    CHECK(fixture.levels == std::vector<double>{0.95, 0.66});
}
