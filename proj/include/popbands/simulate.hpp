#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "popbands/arima.hpp"
#include "popbands/errors.hpp"
#include "popbands/mathfn.hpp"

namespace popbands {

/// Below this many paths empirical quantiles are too noisy to report
/// without a caveat.
inline constexpr std::size_t kQuantilePathFloor = 1000;

/// Simulated future sample paths on the observed scale, row-major:
/// value(path, h) is the level in year origin_year + h.
struct PathEnsemble {
    int origin_year = 0;
    std::size_t n_paths = 0;
    std::size_t horizon = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> values;

    [[nodiscard]] double at(std::size_t path, std::size_t h) const {
        return values[path * horizon + (h - 1)];
    }
};

/**
 * Draws future paths from the fitted model by feeding Gaussian innovations
 * (standard deviation = fitted rmse) through the ARMA recursion on the
 * differenced scale, integrating back, and re-adding the trend.
 *
 * Each path owns an independent counter-based generator derived from the
 * master seed, so results are reproducible for a given (seed, n_paths,
 * horizon) regardless of scheduling or platform.
 */
[[nodiscard]] inline PathEnsemble simulate_paths(const ArimaFit& fit, int origin_year,
                                                 int horizon, std::size_t n_paths,
                                                 std::uint64_t master_seed) {
    if (origin_year != fit.origin_year) {
        throw std::invalid_argument("simulate: origin must be the fitted series end (" +
                                    std::to_string(fit.origin_year) + ")");
    }
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be positive");
    if (n_paths == 0) throw std::invalid_argument("simulate: need at least one path");

    const int p = fit.order.p, q = fit.order.q, d = fit.order.d;
    const int m = static_cast<int>(fit.differenced.size());
    if (m < p || m < q) {
        throw insufficient_data_error("simulate: fitted history shorter than the model memory");
    }

    // Presample context shared by every path.
    std::vector<double> w_tail(fit.differenced.end() - p, fit.differenced.end());
    std::vector<double> e_tail(fit.residuals.end() - q, fit.residuals.end());
    std::vector<double> tails;  // last value of each difference stage of the detrended series
    {
        std::vector<double> stage = fit.detrended;
        tails.push_back(stage.back());
        for (int s = 1; s < d; ++s) {
            for (std::size_t i = 0; i + 1 < stage.size(); ++i) stage[i] = stage[i + 1] - stage[i];
            stage.pop_back();
            tails.push_back(stage.back());
        }
    }

    PathEnsemble ens;
    ens.origin_year = origin_year;
    ens.n_paths = n_paths;
    ens.horizon = static_cast<std::size_t>(horizon);
    ens.master_seed = master_seed;
    ens.values.resize(n_paths * ens.horizon);

    std::vector<double> w(static_cast<std::size_t>(p) + horizon);
    std::vector<double> e(static_cast<std::size_t>(q) + horizon);
    for (std::size_t path = 0; path < n_paths; ++path) {
        SplitMix64 rng(mix_seed(master_seed, path));
        std::copy(w_tail.begin(), w_tail.end(), w.begin());
        std::copy(e_tail.begin(), e_tail.end(), e.begin());
        for (int ell = 0; ell < horizon; ++ell) {
            const double innov = fit.rmse * rng.next_gaussian();
            e[q + ell] = innov;
            double v = innov;
            for (int i = 1; i <= p; ++i) v += fit.ar[i - 1] * w[p + ell - i];
            for (int j = 1; j <= q; ++j) v -= fit.ma[j - 1] * e[q + ell - j];
            w[p + ell] = v;
        }
        // Integrate d times, then restore the trend.
        double* out = &ens.values[path * ens.horizon];
        for (int ell = 0; ell < horizon; ++ell) out[ell] = w[p + ell];
        for (int s = d - 1; s >= 0; --s) {
            double acc = tails[s];
            for (int ell = 0; ell < horizon; ++ell) {
                acc += out[ell];
                out[ell] = acc;
            }
        }
        if (fit.trend) {
            for (int ell = 0; ell < horizon; ++ell) {
                out[ell] += fit.trend->value_at(origin_year + ell + 1);
            }
        }
    }
    return ens;
}

/// Type-7 (linear interpolation) empirical quantiles of the simulated
/// distribution at one horizon. Probabilities must lie in [0, 1].
[[nodiscard]] inline std::vector<double> empirical_quantiles(const PathEnsemble& ens, int horizon,
                                                             std::span<const double> probs) {
    if (horizon < 1 || static_cast<std::size_t>(horizon) > ens.horizon) {
        throw std::invalid_argument("simulate: horizon outside the simulated range");
    }
    std::vector<double> column(ens.n_paths);
    for (std::size_t path = 0; path < ens.n_paths; ++path) {
        column[path] = ens.at(path, static_cast<std::size_t>(horizon));
    }
    std::sort(column.begin(), column.end());

    std::vector<double> out;
    out.reserve(probs.size());
    for (double prob : probs) {
        if (!(prob >= 0.0 && prob <= 1.0)) {
            throw std::invalid_argument("simulate: quantile probability outside [0, 1]");
        }
        const double h = prob * static_cast<double>(column.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, column.size() - 1);
        const double frac = h - static_cast<double>(lo);
        out.push_back(column[lo] + frac * (column[hi] - column[lo]));
    }
    return out;
}

/// Central empirical interval bounds per horizon at one confidence level.
struct EmpiricalIntervals {
    double level = 0.0;
    bool low_precision = false;  ///< too few paths for stable tail quantiles
    std::vector<std::pair<double, double>> bounds;  ///< index h-1 holds horizon h

    [[nodiscard]] std::pair<double, double> at(int horizon) const {
        return bounds.at(static_cast<std::size_t>(horizon) - 1);
    }
};

/// Central (equal-tail) empirical interval at every simulated horizon:
/// quantiles (1-level)/2 and (1+level)/2 of the path distribution.
[[nodiscard]] inline EmpiricalIntervals empirical_intervals(const PathEnsemble& ens, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("simulate: confidence level must lie in (0, 1)");
    }
    EmpiricalIntervals out;
    out.level = level;
    out.low_precision = ens.n_paths < kQuantilePathFloor;
    const double probs[] = {(1.0 - level) / 2.0, (1.0 + level) / 2.0};
    for (std::size_t h = 1; h <= ens.horizon; ++h) {
        const auto q = empirical_quantiles(ens, static_cast<int>(h), probs);
        out.bounds.emplace_back(q[0], q[1]);
    }
    return out;
}

/// Empirical coverage of one analytic interval at one horizon.
struct CoverageRow {
    int year = 0;
    int horizon = 0;
    double lower = 0.0;
    double upper = 0.0;
    double coverage = 0.0;  ///< fraction of paths inside [lower, upper]
};

struct CoverageResult {
    double level = 0.0;
    std::size_t n_paths = 0;
    std::vector<CoverageRow> rows;
};

/**
 * Fraction of simulated paths falling inside the analytic bounds at each
 * band's horizon (bounds inclusive). The bands must line up with the
 * ensemble: same origin, horizons within the simulated range.
 */
[[nodiscard]] inline CoverageResult coverage_check(const PathEnsemble& ens,
                                                   std::span<const ForecastBand> bands,
                                                   double level) {
    CoverageResult result;
    result.level = level;
    result.n_paths = ens.n_paths;
    for (const ForecastBand& band : bands) {
        if (band.horizon < 1 || static_cast<std::size_t>(band.horizon) > ens.horizon ||
            band.year != ens.origin_year + band.horizon) {
            throw data_error("simulate: band for year " + std::to_string(band.year) +
                             " does not align with the simulated ensemble");
        }
        const auto [lower, upper] = band.interval(level);
        std::size_t inside = 0;
        for (std::size_t path = 0; path < ens.n_paths; ++path) {
            const double v = ens.at(path, static_cast<std::size_t>(band.horizon));
            if (v >= lower && v <= upper) ++inside;
        }
        result.rows.push_back({band.year, band.horizon, lower, upper,
                               static_cast<double>(inside) / static_cast<double>(ens.n_paths)});
    }
    return result;
}

}  // namespace popbands
