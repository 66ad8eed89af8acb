#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "popbands/popbands.hpp"

namespace {

void print_summary(const popbands::RunReport& report) {
    const popbands::ArimaFit& fit = report.fit;
    std::printf("model %s  rmse %.9g  %s%s\n", fit.order.to_string().c_str(), fit.rmse,
                fit.converged ? "converged" : "not converged",
                report.bypass ? " (parameters from config)" : "");
    if (report.diagnostics) {
        std::printf("diagnostics: Ljung-Box p = %.6g, %s\n", report.diagnostics->ljung_box.p_value,
                    report.diagnostics->adequate ? "residuals look random"
                                                 : "residual structure remains");
    }
    for (const popbands::CoverageResult& cov : report.coverage) {
        double lo = 1.0, hi = 0.0;
        for (const popbands::CoverageRow& row : cov.rows) {
            lo = std::min(lo, row.coverage);
            hi = std::max(hi, row.coverage);
        }
        std::printf("coverage at %d%%: %.4f..%.4f over %zu horizons (%zu paths)\n",
                    static_cast<int>(std::llround(cov.level * 100.0)), lo, hi, cov.rows.size(),
                    cov.n_paths);
    }
    for (const std::string& warning : report.warnings) {
        std::printf("note: %s\n", warning.c_str());
    }
    for (const std::string& path : report.written) {
        std::printf("wrote %s\n", path.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Box-Jenkins interval forecasts for annual population series"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string series_path;
    std::string points_path;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "run configuration (key = value lines)")
        ->required();
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--series", series_path, "annual series CSV, overrides the config");
    app.add_option("--points", points_path, "point-forecast CSV, overrides the config");
    CLI::Option* seed_opt =
        app.add_option("--seed", seed, "master seed for the simulation check");
    app.fallthrough();

    app.add_subcommand("fit", "estimate the model; write report.md and fit.json");
    app.add_subcommand("forecast", "fit plus interval forecasts, tables and fan chart");
    app.add_subcommand("translate", "forecast plus translation onto point forecasts");
    app.add_subcommand("run", "all stages including the simulation check");
    app.add_subcommand("validate", "fit, forecast, and the simulation coverage check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        popbands::PipelineConfig cfg = popbands::load_config(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        popbands::PipelineIO io;
        io.config_path = config_path;
        io.series_path = series_path;
        io.points_path = points_path;
        io.out_dir = out_dir;
        const popbands::Stage stage =
            popbands::stage_from_name(app.get_subcommands().front()->get_name());
        print_summary(popbands::run_pipeline(std::move(cfg), stage, io));
        return 0;
    } catch (const popbands::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const popbands::data_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const popbands::numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const popbands::io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
