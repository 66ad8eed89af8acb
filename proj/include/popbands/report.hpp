#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "popbands/arima.hpp"
#include "popbands/bridge.hpp"
#include "popbands/config.hpp"
#include "popbands/mathfn.hpp"
#include "popbands/series.hpp"
#include "popbands/simulate.hpp"
#include "popbands/version.hpp"

namespace popbands {

namespace detail {

[[nodiscard]] inline std::string fmt_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

[[nodiscard]] inline std::string fmt_hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

[[nodiscard]] inline std::string level_pct(double level) {
    return std::to_string(std::llround(level * 100.0)) + "%";
}

[[nodiscard]] inline std::string join_g9(std::span<const double> values,
                                         const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += fmt_g9(values[i]);
    }
    return out;
}

}  // namespace detail

/// Everything a finished pipeline stage knows, in one bundle the renderers
/// can turn into tables.csv, report.md, and the structured fit dump.
struct RunReport {
    PipelineConfig config;
    AnnualSeries history{0, {1.0}};  ///< density series the model saw
    ArimaFit fit;
    std::optional<double> r2;
    std::optional<DiagnosticsReport> diagnostics;
    std::vector<ForecastBand> chart_bands;   ///< horizons 1..H for the fan chart
    std::vector<ForecastBand> target_bands;  ///< configured target years only
    std::vector<PointForecast> points;
    std::vector<ReportRow> rows;
    std::vector<CoverageResult> coverage;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> inputs;  ///< label -> content digest
    std::vector<std::string> written;  ///< artifact paths, in write order
    bool bypass = false;
    bool has_forecast = false;
    bool has_translation = false;
};

/// Normalized `key = value` lines reproducing the effective configuration.
[[nodiscard]] inline std::string echo_config(const PipelineConfig& cfg) {
    std::string out;
    const auto line = [&out](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    if (!cfg.series_path.empty()) line("series", cfg.series_path);
    if (!cfg.points_path.empty()) line("points", cfg.points_path);
    if (cfg.land_area_km2 > 0.0) line("land_area_km2", detail::fmt_g9(cfg.land_area_km2));
    if (cfg.origin_year != 0) line("origin_year", std::to_string(cfg.origin_year));
    line("levels", detail::join_g9(cfg.levels));
    if (!cfg.target_years.empty()) {
        std::string years;
        for (std::size_t i = 0; i < cfg.target_years.size(); ++i) {
            if (i) years += ", ";
            years += std::to_string(cfg.target_years[i]);
        }
        line("target_years", years);
    }
    if (cfg.horizon != 0) line("horizon", std::to_string(cfg.horizon));
    if (cfg.order) {
        line("order", std::to_string(cfg.order->p) + "," + std::to_string(cfg.order->d) + "," +
                          std::to_string(cfg.order->q));
    }
    line("detrend", cfg.detrend ? "true" : "false");
    line("date_convention", cfg.date_convention == DateConvention::index_from_1
                                ? "index_from_1"
                                : "calendar_year");
    line("variance_lag_offset", std::to_string(cfg.variance_lag_offset));
    line("alpha", detail::fmt_g9(cfg.alpha));
    line("max_p", std::to_string(cfg.limits.max_p));
    line("max_d", std::to_string(cfg.limits.max_d));
    line("max_q", std::to_string(cfg.limits.max_q));
    line("diag_lags", std::to_string(cfg.diag_lags));
    line("n_paths", std::to_string(cfg.n_paths));
    line("seed", std::to_string(cfg.seed));
    if (cfg.allow_nonconverged) line("allow_nonconverged", "true");
    for (const auto& [level, mult] : cfg.level_multipliers) {
        line("level_multiplier_" + std::to_string(std::llround(level * 100.0)),
             detail::fmt_g9(mult));
    }
    if (cfg.bypass_order) {
        line("bypass_order", std::to_string(cfg.bypass_order->p) + "," +
                                 std::to_string(cfg.bypass_order->d) + "," +
                                 std::to_string(cfg.bypass_order->q));
        if (!cfg.bypass_ar.empty()) line("bypass_ar", detail::join_g9(cfg.bypass_ar));
        if (!cfg.bypass_ma.empty()) line("bypass_ma", detail::join_g9(cfg.bypass_ma));
        line("bypass_rmse", detail::fmt_g9(cfg.bypass_rmse));
        if (!cfg.bypass_means.empty()) {
            std::string items;
            for (const auto& [year, mean] : cfg.bypass_means) {
                if (!items.empty()) items += ", ";
                items += std::to_string(year) + ":" + detail::fmt_g9(mean);
            }
            line("bypass_means", items);
        }
        for (const auto& [level, by_year] : cfg.bypass_bounds) {
            std::string items;
            for (const auto& [year, bounds] : by_year) {
                if (!items.empty()) items += ", ";
                items += std::to_string(year) + ":" + detail::fmt_g9(bounds.first) + ":" +
                         detail::fmt_g9(bounds.second);
            }
            line("bypass_bounds_" + std::to_string(std::llround(level * 100.0)), items);
        }
    }
    return out;
}

/**
 * Renders the flat results table. Densities, standard errors, and relative
 * widths carry nine significant digits; translated population bounds are
 * whole persons. density_intervals rows leave the point column empty;
 * translated_intervals rows repeat the density columns so each row is
 * self-contained.
 */
[[nodiscard]] inline std::string render_tables_csv(std::span<const ReportRow> rows) {
    std::string csv =
        "table_id,year,level,point,lower,upper,mean_density,se,r_lower,r_upper\n";
    for (const ReportRow& row : rows) {
        csv += "density_intervals," + std::to_string(row.year) + "," +
               detail::fmt_g9(row.level) + ",," + detail::fmt_g9(row.density_lower) + "," +
               detail::fmt_g9(row.density_upper) + "," + detail::fmt_g9(row.mean_density) + "," +
               detail::fmt_g9(row.se) + "," + detail::fmt_g9(row.r_lower) + "," +
               detail::fmt_g9(row.r_upper) + "\n";
    }
    for (const ReportRow& row : rows) {
        if (!row.has_point) continue;
        csv += "translated_intervals," + std::to_string(row.year) + "," +
               detail::fmt_g9(row.level) + "," + detail::fmt_g9(row.point) + "," +
               std::to_string(row.translated_lower) + "," + std::to_string(row.translated_upper) +
               "," + detail::fmt_g9(row.mean_density) + "," + detail::fmt_g9(row.se) + "," +
               detail::fmt_g9(row.r_lower) + "," + detail::fmt_g9(row.r_upper) + "\n";
    }
    return csv;
}

/// Markdown report: model summary, diagnostics, the table analogs (points,
/// density intervals, relative widths, translated intervals at the primary
/// level, one combined section per extra level), simulation coverage, notes,
/// and a provenance block sufficient to re-derive every number.
[[nodiscard]] inline std::string render_report_md(const RunReport& report) {
    using detail::fmt_g9;
    std::string md = "# Population interval forecast\n\n";

    // ---- model -----------------------------------------------------------
    const ArimaFit& fit = report.fit;
    md += "## Model\n\n";
    if (report.bypass) {
        md += "Parameters were supplied in the configuration (bypass block); "
              "no estimation was performed on the input series.\n\n";
    }
    md += "- Order: " + fit.order.to_string() + "\n";
    for (int i = 0; i < fit.order.p; ++i) {
        md += "- phi_" + std::to_string(i + 1) + " = " + fmt_g9(fit.ar[i]);
        if (static_cast<int>(fit.param_se.size()) == fit.order.n_params()) {
            const double se = fit.param_se[i];
            md += " (se " + fmt_g9(se) + ", t " + fmt_g9(se > 0.0 ? fit.ar[i] / se : 0.0) + ")";
        }
        md += "\n";
    }
    for (int j = 0; j < fit.order.q; ++j) {
        md += "- theta_" + std::to_string(j + 1) + " = " + fmt_g9(fit.ma[j]);
        if (static_cast<int>(fit.param_se.size()) == fit.order.n_params()) {
            const double se = fit.param_se[fit.order.p + j];
            md += " (se " + fmt_g9(se) + ", t " + fmt_g9(se > 0.0 ? fit.ma[j] / se : 0.0) + ")";
        }
        md += "\n";
    }
    md += "- Residual sum of squares: " + fmt_g9(fit.rss) + "\n";
    md += "- Mean square error: " + fmt_g9(fit.mse) + " (rss / " +
          std::to_string(fit.n_effective) + ")\n";
    md += "- Root mean square error: " + fmt_g9(fit.rmse) + "\n";
    md += "- Observations: " + std::to_string(fit.n_obs) + " (" +
          std::to_string(fit.start_year) + "-" + std::to_string(fit.origin_year) + ")\n";
    if (report.r2) md += "- Pseudo R-squared: " + fmt_g9(*report.r2) + "\n";
    md += std::string("- Converged: ") + (fit.converged ? "yes" : "no") + "\n";
    if (fit.trend) {
        md += "- Trend: value = " + fmt_g9(fit.trend->intercept) + " + " +
              fmt_g9(fit.trend->slope) + " * date, date convention " +
              std::string(to_string(fit.trend->convention)) + "\n";
    } else {
        md += "- Trend: none (series modeled directly)\n";
    }
    md += "\n";

    if (!report.bypass && !fit.trace.empty()) {
        md += "### Minimization trace\n\n";
        md += "| itn | error sum of squares | lambda | parameters |\n";
        md += "| --- | --- | --- | --- |\n";
        for (const IterationRecord& rec : fit.trace) {
            md += "| " + std::to_string(rec.itn) + " | " + fmt_g9(rec.ess) + " | " +
                  fmt_g9(rec.lambda) + " | " + detail::join_g9(rec.params) + " |\n";
        }
        md += "\n";
    }

    // ---- diagnostics -------------------------------------------------------
    if (report.diagnostics) {
        const DiagnosticsReport& diag = *report.diagnostics;
        md += "## Residual diagnostics\n\n";
        md += "Significant if |correlation| > " + fmt_g9(diag.residual_acf.band) + "\n\n";
        md += "| lag | autocorrelation |\n| --- | --- |\n";
        for (std::size_t lag = 1; lag <= diag.residual_acf.max_lag; ++lag) {
            md += "| " + std::to_string(lag) + " | " + fmt_g9(diag.residual_acf.at(lag)) + " |\n";
        }
        md += "\nLjung-Box: Q = " + fmt_g9(diag.ljung_box.q_stat) + ", df = " +
              std::to_string(diag.ljung_box.df) + ", p = " + fmt_g9(diag.ljung_box.p_value) +
              "\n\n";
        md += diag.adequate
                  ? "The residuals pass the portmanteau test and stay inside the band.\n\n"
                  : "The residuals show remaining structure at alpha = " + fmt_g9(diag.alpha) +
                        ".\n\n";
    }

    if (report.has_forecast && !report.target_bands.empty()) {
        std::vector<double> levels = report.config.levels;
        std::sort(levels.rbegin(), levels.rend());
        const double primary = levels.front();

        // ---- point forecasts (input table) ---------------------------------
        if (!report.points.empty()) {
            md += "## Population point forecasts (input)\n\n";
            md += "| year | forecast |\n| --- | --- |\n";
            for (const PointForecast& pf : report.points) {
                md += "| " + std::to_string(pf.year) + " | " + fmt_g9(pf.value) + " |\n";
            }
            md += "\n";
        }

        const auto rows_at = [&report](double level) {
            std::vector<const ReportRow*> out;
            for (const ReportRow& row : report.rows) {
                if (std::fabs(row.level - level) < 1e-12) out.push_back(&row);
            }
            return out;
        };

        // ---- primary-level analogs ----------------------------------------
        md += "## Density forecast intervals (" + detail::level_pct(primary) +
              " confidence)\n\n";
        md += "| year | mean density | se | lower | upper |\n| --- | --- | --- | --- | --- |\n";
        for (const ReportRow* row : rows_at(primary)) {
            md += "| " + std::to_string(row->year) + " | " + fmt_g9(row->mean_density) + " | " +
                  fmt_g9(row->se) + " | " + fmt_g9(row->density_lower) + " | " +
                  fmt_g9(row->density_upper) + " |\n";
        }
        md += "\n## Relative interval widths (" + detail::level_pct(primary) +
              " confidence)\n\n";
        md += "| year | lower | upper |\n| --- | --- | --- |\n";
        for (const ReportRow* row : rows_at(primary)) {
            md += "| " + std::to_string(row->year) + " | " + fmt_g9(row->r_lower) + " | " +
                  fmt_g9(row->r_upper) + " |\n";
        }
        md += "\n";
        if (report.has_translation) {
            md += "## Translated population intervals (" + detail::level_pct(primary) +
                  " confidence)\n\n";
            md += "| year | point forecast | lower | upper |\n| --- | --- | --- | --- |\n";
            for (const ReportRow* row : rows_at(primary)) {
                if (!row->has_point) continue;
                md += "| " + std::to_string(row->year) + " | " + fmt_g9(row->point) + " | " +
                      std::to_string(row->translated_lower) + " | " +
                      std::to_string(row->translated_upper) + " |\n";
            }
            md += "\n";
        }

        // ---- one combined section per extra level --------------------------
        for (std::size_t li = 1; li < levels.size(); ++li) {
            const double lv = levels[li];
            md += "## Intervals at " + detail::level_pct(lv) + " confidence\n\n";
            md += "| year | density lower | density upper | r lower | r upper |";
            md += report.has_translation ? " point lower | point upper |\n" : "\n";
            md += "| --- | --- | --- | --- | --- |";
            md += report.has_translation ? " --- | --- |\n" : "\n";
            for (const ReportRow* row : rows_at(lv)) {
                md += "| " + std::to_string(row->year) + " | " + fmt_g9(row->density_lower) +
                      " | " + fmt_g9(row->density_upper) + " | " + fmt_g9(row->r_lower) + " | " +
                      fmt_g9(row->r_upper) + " |";
                if (report.has_translation) {
                    if (row->has_point) {
                        md += " " + std::to_string(row->translated_lower) + " | " +
                              std::to_string(row->translated_upper) + " |";
                    } else {
                        md += " | |";
                    }
                }
                md += "\n";
            }
            md += "\n";
        }
    }

    // ---- simulation coverage ----------------------------------------------
    if (!report.coverage.empty()) {
        md += "## Simulation coverage\n\n";
        for (const CoverageResult& cov : report.coverage) {
            md += "Nominal level " + detail::level_pct(cov.level) + ", " +
                  std::to_string(cov.n_paths) + " paths:\n\n";
            md += "| year | horizon | empirical coverage |\n| --- | --- | --- |\n";
            for (const CoverageRow& row : cov.rows) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f", row.coverage);
                md += "| " + std::to_string(row.year) + " | " + std::to_string(row.horizon) +
                      " | " + buf + " |\n";
            }
            md += "\n";
        }
    }

    // ---- notes --------------------------------------------------------------
    if (!report.warnings.empty()) {
        md += "## Notes\n\n";
        for (const std::string& w : report.warnings) md += "- " + w + "\n";
        md += "\n";
    }

    // ---- provenance ---------------------------------------------------------
    md += "## Provenance\n\n";
    md += "- Toolkit version: " + std::string(kVersion) + "\n";
    md += "- Master seed: " + std::to_string(report.config.seed) + "\n";
    if (!report.inputs.empty()) {
        md += "- Input digests (FNV-1a 64):\n";
        for (const auto& [label, digest] : report.inputs) {
            md += "  - " + label + ": " + digest + "\n";
        }
    }
    md += "\nEffective configuration:\n\n```\n" + echo_config(report.config) + "```\n";
    return md;
}

/// Structured dump of the fit and run context as JSON text.
[[nodiscard]] inline std::string render_fit_json(const RunReport& report) {
    nlohmann::json j;
    const ArimaFit& fit = report.fit;
    j["version"] = kVersion;
    j["bypass"] = report.bypass;
    j["order"] = {{"p", fit.order.p}, {"d", fit.order.d}, {"q", fit.order.q}};
    j["ar"] = fit.ar;
    j["ma"] = fit.ma;
    j["param_se"] = fit.param_se;
    j["rss"] = fit.rss;
    j["mse"] = fit.mse;
    j["rmse"] = fit.rmse;
    j["n_obs"] = fit.n_obs;
    j["n_effective"] = fit.n_effective;
    j["converged"] = fit.converged;
    j["start_year"] = fit.start_year;
    j["origin_year"] = fit.origin_year;
    if (report.r2) j["pseudo_r2"] = *report.r2;
    if (fit.trend) {
        j["trend"] = {{"intercept", fit.trend->intercept},
                      {"slope", fit.trend->slope},
                      {"date_convention", std::string(to_string(fit.trend->convention))}};
    } else {
        j["trend"] = nullptr;
    }
    j["trace"] = nlohmann::json::array();
    for (const IterationRecord& rec : fit.trace) {
        j["trace"].push_back(
            {{"itn", rec.itn}, {"ess", rec.ess}, {"lambda", rec.lambda}, {"params", rec.params}});
    }
    if (report.diagnostics) {
        const DiagnosticsReport& diag = *report.diagnostics;
        j["diagnostics"] = {{"acf", diag.residual_acf.correlations},
                            {"band", diag.residual_acf.band},
                            {"ljung_box_q", diag.ljung_box.q_stat},
                            {"ljung_box_df", diag.ljung_box.df},
                            {"ljung_box_p", diag.ljung_box.p_value},
                            {"alpha", diag.alpha},
                            {"adequate", diag.adequate}};
    } else {
        j["diagnostics"] = nullptr;
    }
    j["forecast"] = nlohmann::json::array();
    for (const ForecastBand& band : report.target_bands) {
        nlohmann::json jb = {
            {"year", band.year}, {"horizon", band.horizon}, {"mean", band.mean}, {"se", band.se}};
        for (const auto& [level, bounds] : band.intervals) {
            jb["intervals"][detail::fmt_g9(level)] = {bounds.first, bounds.second};
        }
        j["forecast"].push_back(std::move(jb));
    }
    j["coverage"] = nlohmann::json::array();
    for (const CoverageResult& cov : report.coverage) {
        nlohmann::json jc = {{"level", cov.level}, {"n_paths", cov.n_paths}};
        jc["rows"] = nlohmann::json::array();
        for (const CoverageRow& row : cov.rows) {
            jc["rows"].push_back({{"year", row.year},
                                  {"horizon", row.horizon},
                                  {"lower", row.lower},
                                  {"upper", row.upper},
                                  {"coverage", row.coverage}});
        }
        j["coverage"].push_back(std::move(jc));
    }
    j["warnings"] = report.warnings;
    j["seed"] = report.config.seed;
    j["levels"] = report.config.levels;
    j["target_years"] = report.config.target_years;
    j["variance_lag_offset"] = report.config.variance_lag_offset;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [label, digest] : report.inputs) inputs[label] = digest;
    j["inputs"] = std::move(inputs);
    return j.dump(2) + "\n";
}

}  // namespace popbands
