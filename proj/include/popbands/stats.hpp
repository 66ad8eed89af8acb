#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "popbands/errors.hpp"
#include "popbands/mathfn.hpp"
#include "popbands/series.hpp"

namespace popbands {

/// Default significance band for sample autocorrelations: 2/sqrt(n).
/// (1.96/sqrt(n) is available by passing a different multiplier.)
[[nodiscard]] inline double significance_band(std::size_t n, double multiplier = 2.0) {
    if (n == 0) throw std::invalid_argument("stats: band needs a positive sample size");
    return multiplier / std::sqrt(static_cast<double>(n));
}

/**
 * Sample autocorrelations r_1..r_max_lag together with the significance
 * band for the sample size. The denominator is the full-sample (lag-0) sum
 * of squares, the standard Box-Jenkins estimator, which guarantees
 * |r_k| <= 1 at every lag.
 */
struct AcfResult {
    std::size_t n = 0;
    std::size_t max_lag = 0;
    std::vector<double> correlations;  ///< r_1..r_max_lag
    double band = 0.0;

    /// r_k for k in 1..max_lag.
    [[nodiscard]] double at(std::size_t lag) const { return correlations.at(lag - 1); }
};

[[nodiscard]] inline AcfResult acf(const AnnualSeries& series, std::size_t max_lag,
                                   double band_multiplier = 2.0) {
    const std::size_t n = series.size();
    if (max_lag < 1 || max_lag >= n) {
        throw std::invalid_argument("stats: acf max_lag must satisfy 1 <= max_lag < n");
    }
    const double mean =
        std::accumulate(series.values.begin(), series.values.end(), 0.0) /
        static_cast<double>(n);
    double denom = 0.0;
    for (double v : series.values) denom += (v - mean) * (v - mean);
    if (denom <= 0.0) {
        throw degenerate_series_error("stats: acf of a zero-variance series");
    }
    AcfResult result;
    result.n = n;
    result.max_lag = max_lag;
    result.band = significance_band(n, band_multiplier);
    result.correlations.resize(max_lag);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) {
            num += (series.values[t] - mean) * (series.values[t + k] - mean);
        }
        result.correlations[k - 1] = num / denom;
    }
    return result;
}

/// Durbin-Levinson recursion: maps autocorrelations r_1..r_m to partial
/// autocorrelations phi_11..phi_mm. Exposed separately so exact theoretical
/// autocorrelation sequences can be fed through directly.
[[nodiscard]] inline std::vector<double> durbin_levinson(std::span<const double> correlations) {
    const std::size_t m = correlations.size();
    if (m == 0) throw std::invalid_argument("stats: durbin_levinson needs at least lag 1");
    std::vector<double> pacf_values(m);
    std::vector<double> phi_prev, phi_cur;
    pacf_values[0] = correlations[0];
    phi_prev = {correlations[0]};
    for (std::size_t k = 2; k <= m; ++k) {
        double num = correlations[k - 1];
        double den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= phi_prev[j - 1] * correlations[k - 1 - j];
            den -= phi_prev[j - 1] * correlations[j - 1];
        }
        if (std::fabs(den) < 1e-14) {
            throw numeric_error("stats: degenerate Durbin-Levinson step at lag " +
                                std::to_string(k));
        }
        const double phi_kk = num / den;
        phi_cur.assign(k, 0.0);
        for (std::size_t j = 1; j < k; ++j) {
            phi_cur[j - 1] = phi_prev[j - 1] - phi_kk * phi_prev[k - 1 - j];
        }
        phi_cur[k - 1] = phi_kk;
        pacf_values[k - 1] = phi_kk;
        phi_prev = phi_cur;
    }
    return pacf_values;
}

/// Partial autocorrelations of a series at lags 1..max_lag.
[[nodiscard]] inline std::vector<double> pacf(const AnnualSeries& series, std::size_t max_lag) {
    const AcfResult r = acf(series, max_lag);
    return durbin_levinson(r.correlations);
}

/// Ljung-Box portmanteau test result.
struct LjungBoxResult {
    double q_stat = 0.0;
    std::size_t df = 1;
    double p_value = 1.0;
};

/**
 * Ljung-Box Q over the first m autocorrelations:
 *   Q = n (n+2) sum_{k=1..m} r_k^2 / (n-k)
 * with df = max(m - fitted_params, 1) and the p-value from the chi-square
 * upper tail. The df clamp keeps the degenerate m <= fitted_params case
 * well defined.
 */
[[nodiscard]] inline LjungBoxResult ljung_box(std::span<const double> correlations,
                                              std::size_t n, std::size_t m,
                                              std::size_t fitted_params = 0) {
    if (m < 1) throw std::invalid_argument("stats: ljung_box needs m >= 1");
    if (n <= m) throw std::invalid_argument("stats: ljung_box needs n > m");
    if (correlations.size() < m) {
        throw std::invalid_argument("stats: ljung_box given fewer than m correlations");
    }
    double q = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        q += correlations[k - 1] * correlations[k - 1] / static_cast<double>(n - k);
    }
    q *= static_cast<double>(n) * static_cast<double>(n + 2);
    LjungBoxResult result;
    result.q_stat = q;
    result.df = (m > fitted_params) ? (m - fitted_params) : 1;
    result.p_value = chi_squared_upper_tail(q, result.df);
    return result;
}

/// 5% critical value of the Dickey-Fuller tau distribution, constant-only
/// case, large-sample. Validated by simulating the null distribution.
inline constexpr double kAdfCritical5Pct = -2.86;

struct AdfResult {
    double tau = 0.0;
    bool reject_unit_root = false;
    double critical_value = kAdfCritical5Pct;
};

/**
 * Augmented Dickey-Fuller unit-root test, constant term only:
 *   dy_t = c + rho * y_{t-1} + sum_{i=1..L} g_i dy_{t-i} + e_t
 * tau is the t-statistic on rho; the unit root is rejected at 5% when tau
 * falls below the embedded critical value.
 */
[[nodiscard]] inline AdfResult adf_test(const AnnualSeries& series, std::size_t lag_order = 0) {
    const std::size_t n = series.size();
    if (n <= lag_order + 10) {
        throw insufficient_data_error("stats: adf needs more than lag_order + 10 observations");
    }
    const auto& y = series.values;
    std::vector<double> dy(n - 1);
    for (std::size_t t = 0; t + 1 < n; ++t) dy[t] = y[t + 1] - y[t];

    // Rows start once all lagged differences exist.
    const std::size_t first = lag_order;  // index into dy
    const std::size_t rows = dy.size() - first;
    std::vector<std::vector<double>> columns;
    columns.emplace_back(rows, 1.0);             // constant
    columns.emplace_back(rows, 0.0);             // y_{t-1}
    for (std::size_t i = 0; i < lag_order; ++i) columns.emplace_back(rows, 0.0);
    std::vector<double> lhs(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = first + r;  // dy index of the response
        lhs[r] = dy[t];
        columns[1][r] = y[t];  // level entering the response difference
        for (std::size_t i = 0; i < lag_order; ++i) columns[2 + i][r] = dy[t - 1 - i];
    }
    const OlsFit ols = fit_ols(columns, lhs);
    AdfResult result;
    result.tau = ols.beta[1] / ols.se[1];
    result.reject_unit_root = result.tau < kAdfCritical5Pct;
    return result;
}

}  // namespace popbands
