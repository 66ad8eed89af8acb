#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "popbands/arima.hpp"
#include "popbands/bridge.hpp"
#include "popbands/config.hpp"
#include "popbands/csv.hpp"
#include "popbands/errors.hpp"
#include "popbands/report.hpp"
#include "popbands/simulate.hpp"
#include "popbands/svg.hpp"

namespace popbands {

/// Which part of the fit -> forecast -> translate -> validate chain to run.
/// `run` executes everything including the simulation check.
enum class Stage { fit, forecast, translate, run, validate };

[[nodiscard]] inline Stage stage_from_name(const std::string& name) {
    if (name == "fit") return Stage::fit;
    if (name == "forecast") return Stage::forecast;
    if (name == "translate") return Stage::translate;
    if (name == "run") return Stage::run;
    if (name == "validate") return Stage::validate;
    throw config_error("pipeline: unknown stage '" + name + "'");
}

/// File locations for one invocation. Paths given here override the
/// config's own; out_dir empty means "compute but write nothing".
struct PipelineIO {
    std::string config_path;
    std::string series_path;
    std::string points_path;
    std::string out_dir;
};

namespace detail {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << content;
    out.flush();
    if (!out) throw io_error("failed writing " + path);
}

[[nodiscard]] inline std::string file_digest(const std::string& path) {
    const std::string bytes = read_text_file(path);
    return fmt_hex64(fnv1a64(std::span<const char>(bytes.data(), bytes.size())));
}

[[nodiscard]] inline std::string text_digest(const std::string& text) {
    return fmt_hex64(fnv1a64(std::span<const char>(text.data(), text.size())));
}

}  // namespace detail

/**
 * Executes the requested stages and, when io.out_dir is set, writes
 * report.md and fit.json (always) plus tables.csv and fanchart.svg (for the
 * forecasting stages). All outputs are pure functions of the inputs and the
 * configured seed.
 */
inline RunReport run_pipeline(PipelineConfig cfg, Stage stage, const PipelineIO& io = {}) {
    const bool wants_forecast = stage != Stage::fit;
    const bool wants_translate = stage == Stage::translate || stage == Stage::run;
    const bool wants_coverage = stage == Stage::validate || stage == Stage::run;
    const bool writes_tables =
        stage == Stage::forecast || stage == Stage::translate || stage == Stage::run;

    // Paths from the config resolve relative to the config file; paths from
    // the command line resolve relative to the working directory as typed.
    const std::filesystem::path cfg_dir =
        io.config_path.empty() ? std::filesystem::path()
                               : std::filesystem::path(io.config_path).parent_path();
    const auto resolve = [&cfg_dir](const std::string& p) {
        const std::filesystem::path fp(p);
        if (!cfg_dir.empty() && fp.is_relative()) return (cfg_dir / fp).string();
        return p;
    };
    if (!io.series_path.empty()) {
        cfg.series_path = io.series_path;
    } else if (!cfg.series_path.empty()) {
        cfg.series_path = resolve(cfg.series_path);
    }
    if (!io.points_path.empty()) {
        cfg.points_path = io.points_path;
    } else if (!cfg.points_path.empty()) {
        cfg.points_path = resolve(cfg.points_path);
    }
    if (cfg.series_path.empty()) {
        throw config_error(
            "pipeline: a series file is required (config key 'series' or --series)");
    }

    RunReport report;

    // ---- load & normalize the series --------------------------------------
    const SeriesCsv raw = load_series_csv(cfg.series_path);
    AnnualSeries density = raw.series;
    if (!raw.is_density) {
        if (!(cfg.land_area_km2 > 0.0)) {
            throw config_error(
                "pipeline: population-count input needs land_area_km2 to form densities");
        }
        density = to_density(raw.series, cfg.land_area_km2).series;
    } else if (cfg.land_area_km2 > 0.0) {
        report.warnings.push_back(
            "land_area_km2 is set but the input series already holds densities; ignored");
    }
    report.history = density;
    const int origin = density.last_year();
    if (cfg.origin_year != 0 && origin < cfg.origin_year) {
        report.warnings.push_back(
            "the series ends in " + std::to_string(origin) + ", before origin_year " +
            std::to_string(cfg.origin_year) +
            "; the series should encompass the projection's base data");
    }

    // ---- fit ----------------------------------------------------------------
    FitOptions fit_options;
    fit_options.detrend = cfg.detrend;
    fit_options.date_convention = cfg.date_convention;
    if (cfg.bypass_requested()) {
        std::optional<TrendModel> trend;
        if (cfg.detrend) trend = fit_trend(density, cfg.date_convention).first;
        report.fit = fit_from_parameters(density, *cfg.bypass_order, cfg.bypass_ar,
                                         cfg.bypass_ma, cfg.bypass_rmse, trend);
        report.bypass = true;
    } else if (cfg.order) {
        report.fit = fit_css_lm(density, *cfg.order, fit_options);
    } else {
        SearchResult found =
            model_search(density, cfg.limits, cfg.alpha, fit_options, cfg.diag_lags);
        report.fit = std::move(found.fit);
        report.diagnostics = std::move(found.diagnostics);
        for (std::string& note : found.notes) report.warnings.push_back(std::move(note));
    }
    if (!report.fit.converged) {
        if (!cfg.allow_nonconverged) {
            throw numeric_error(
                "pipeline: the fit did not converge; set allow_nonconverged = true to "
                "proceed with the last iterate");
        }
        report.warnings.push_back("the fit did not converge; results use the last iterate");
    }
    if (!report.diagnostics) {
        const AnnualSeries resid = residual_series(report.fit);
        if (resid.size() >= 3) {
            const std::size_t lags = std::min(cfg.diag_lags, resid.size() - 1);
            report.diagnostics = diagnose(report.fit, resid, lags, cfg.alpha);
        }
    }
    try {
        report.r2 = pseudo_r2(report.fit, density);
    } catch (const degenerate_series_error&) {
        // a flat series has no total variation to explain; leave r2 unset
    }

    // ---- forecast -------------------------------------------------------------
    std::vector<ForecastBand> model_bands;  // pure model output, used for coverage
    if (wants_forecast) {
        if (cfg.target_years.empty() && cfg.horizon == 0) {
            throw config_error("pipeline: this stage needs target_years or horizon");
        }
        int h_max = cfg.horizon;
        for (int year : cfg.target_years) {
            if (year <= origin) {
                throw config_error("pipeline: target year " + std::to_string(year) +
                                   " is not after the forecast origin " +
                                   std::to_string(origin));
            }
            h_max = std::max(h_max, year - origin);
        }
        std::vector<int> horizons(static_cast<std::size_t>(h_max));
        for (int h = 1; h <= h_max; ++h) horizons[h - 1] = h;
        model_bands = forecast(report.fit, origin, horizons, cfg.levels,
                               cfg.variance_lag_offset, cfg.level_multipliers,
                               cfg.allow_nonconverged);
        report.chart_bands = model_bands;

        if (report.bypass && (!cfg.bypass_means.empty() || !cfg.bypass_bounds.empty())) {
            for (const auto& [year, mean] : cfg.bypass_means) {
                if (year <= origin || year > origin + h_max) {
                    throw config_error("pipeline: bypass mean for year " + std::to_string(year) +
                                       " lies outside the forecast range");
                }
            }
            for (ForecastBand& band : report.chart_bands) {
                const auto mean_it = cfg.bypass_means.find(band.year);
                if (mean_it != cfg.bypass_means.end()) {
                    band.mean = mean_it->second;
                    for (auto& [level, bounds] : band.intervals) {
                        const auto mult_it = cfg.level_multipliers.find(level);
                        const double z = (mult_it != cfg.level_multipliers.end())
                                             ? mult_it->second
                                             : two_sided_z(level);
                        bounds = {band.mean - z * band.se, band.mean + z * band.se};
                    }
                }
                for (auto& [level, bounds] : band.intervals) {
                    const auto level_it = cfg.bypass_bounds.find(level);
                    if (level_it == cfg.bypass_bounds.end()) continue;
                    const auto year_it = level_it->second.find(band.year);
                    if (year_it != level_it->second.end()) bounds = year_it->second;
                }
            }
        }
        for (int year : cfg.target_years) {
            const auto it = std::find_if(report.chart_bands.begin(), report.chart_bands.end(),
                                         [year](const ForecastBand& b) { return b.year == year; });
            report.target_bands.push_back(*it);
        }
        report.has_forecast = true;
    }

    // ---- translate -----------------------------------------------------------
    if (wants_translate) {
        if (cfg.points_path.empty()) {
            if (stage == Stage::translate) {
                throw config_error(
                    "pipeline: translate needs a points file (config key 'points' or --points)");
            }
            report.warnings.push_back("no point forecasts supplied; translation skipped");
        } else {
            report.points = load_points_csv(cfg.points_path);
            std::sort(report.points.begin(), report.points.end(),
                      [](const PointForecast& a, const PointForecast& b) {
                          return a.year < b.year;
                      });
            if (report.points.empty()) {
                report.warnings.push_back(
                    "the points file has a header but no rows; translation skipped");
            }
        }
        report.has_translation = !report.points.empty();
    }
    if (report.has_forecast) {
        report.rows = build_report_rows(report.target_bands, report.points);
    }
    for (double level : cfg.levels) {
        if (std::llround(level * 100.0) == 66 && report.has_forecast &&
            !cfg.level_multipliers.contains(level)) {
            report.warnings.push_back(
                "66% intervals use the Gaussian multiplier z(0.66) = 0.954165; published "
                "two-thirds bounds for this translation method run a few percent wider, and "
                "the source of that gap is an open question. Set level_multiplier_66 to pin a "
                "different multiplier.");
        }
    }

    // ---- simulation check ------------------------------------------------------
    if (wants_coverage && !model_bands.empty()) {
        if (cfg.n_paths < kQuantilePathFloor) {
            report.warnings.push_back(
                "n_paths is below " + std::to_string(kQuantilePathFloor) +
                "; empirical coverage estimates will be noisy");
        }
        const int h_max = static_cast<int>(model_bands.size());
        const PathEnsemble ensemble =
            simulate_paths(report.fit, origin, h_max, cfg.n_paths, cfg.seed);
        std::vector<double> levels_desc = cfg.levels;
        std::sort(levels_desc.rbegin(), levels_desc.rend());
        for (double level : levels_desc) {
            CoverageResult cov = coverage_check(ensemble, model_bands, level);
            double worst = 1.0;
            int worst_h = 0;
            for (const CoverageRow& row : cov.rows) {
                if (row.coverage < worst) {
                    worst = row.coverage;
                    worst_h = row.horizon;
                }
            }
            if (worst < level - 0.02) {
                report.warnings.push_back(
                    "empirical coverage at the " + detail::level_pct(level) +
                    " level drops to " + detail::fmt_g9(worst) + " at horizon " +
                    std::to_string(worst_h) + "; intervals may be too narrow");
            }
            report.coverage.push_back(std::move(cov));
        }
    }

    // ---- provenance --------------------------------------------------------------
    if (!io.config_path.empty()) {
        report.inputs.emplace_back("config " + io.config_path,
                                   detail::file_digest(io.config_path));
    } else {
        report.inputs.emplace_back("config (effective)",
                                   detail::text_digest(echo_config(cfg)));
    }
    report.inputs.emplace_back("series " + cfg.series_path,
                               detail::file_digest(cfg.series_path));
    if (!cfg.points_path.empty() && wants_translate) {
        report.inputs.emplace_back("points " + cfg.points_path,
                                   detail::file_digest(cfg.points_path));
    }
    report.config = cfg;

    // ---- write artifacts -----------------------------------------------------------
    if (!io.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(io.out_dir, ec);
        if (ec) throw io_error("cannot create output directory " + io.out_dir);
        const std::filesystem::path out(io.out_dir);
        const auto emit = [&report](const std::string& path, const std::string& content) {
            detail::write_text_file(path, content);
            report.written.push_back(path);
        };
        emit((out / "report.md").string(), render_report_md(report));
        emit((out / "fit.json").string(), render_fit_json(report));
        if (writes_tables) {
            emit((out / "tables.csv").string(), render_tables_csv(report.rows));
            emit((out / "fanchart.svg").string(),
                 emit_fanchart_svg(report.history, report.chart_bands, cfg.levels,
                                   "Population density: observed and forecast"));
        }
    }
    return report;
}

}  // namespace popbands
