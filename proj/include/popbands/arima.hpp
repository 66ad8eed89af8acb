#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "popbands/errors.hpp"
#include "popbands/mathfn.hpp"
#include "popbands/series.hpp"
#include "popbands/stats.hpp"
#include "popbands/trend.hpp"

namespace popbands {

/// Model order (p, d, q): AR order, differencing degree, MA order.
struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    [[nodiscard]] int n_params() const { return p + q; }
    [[nodiscard]] std::string to_string() const {
        return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
    }
    friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

/// True when the lag polynomial 1 - c_1 B - ... - c_m B^m has all roots
/// strictly outside the unit circle, tested through the step-down (reflection
/// coefficient) recursion. Applies to AR stationarity and MA invertibility
/// alike under the sign convention used here.
[[nodiscard]] inline bool poly_stable(std::span<const double> coeffs, double margin = 1e-6) {
    std::vector<double> a(coeffs.begin(), coeffs.end());
    while (!a.empty()) {
        const double k = a.back();
        if (!(std::fabs(k) < 1.0 - margin)) return false;
        a.pop_back();
        if (a.empty()) break;
        const double denom = 1.0 - k * k;
        std::vector<double> next(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            next[j] = (a[j] + k * a[a.size() - 1 - j]) / denom;
        }
        a = std::move(next);
    }
    return true;
}

namespace detail {

// Conditional residual recursion, presample w and eps taken as zero:
//   eps_t = w_t - sum_i phi_i w_{t-i} + sum_j theta_j eps_{t-j}
inline void css_residuals_into(std::span<const double> params, std::span<const double> w,
                               const ArimaOrder& order, std::vector<double>& eps) {
    const int p = order.p, q = order.q;
    const int m = static_cast<int>(w.size());
    eps.resize(w.size());
    for (int t = 0; t < m; ++t) {
        double e = w[t];
        for (int i = 1; i <= p && i <= t; ++i) e -= params[i - 1] * w[t - i];
        for (int j = 1; j <= q && j <= t; ++j) e += params[p + j - 1] * eps[t - j];
        eps[t] = e;
    }
}

}  // namespace detail

/// Residuals of the conditional-least-squares recursion.
[[nodiscard]] inline std::vector<double> css_residuals(std::span<const double> params,
                                                       std::span<const double> w,
                                                       const ArimaOrder& order) {
    if (static_cast<int>(params.size()) != order.n_params()) {
        throw std::invalid_argument("arima: parameter vector must have length p + q");
    }
    std::vector<double> eps;
    detail::css_residuals_into(params, w, order, eps);
    return eps;
}

/// Conditional sum of squares: the quantity the optimizer minimizes.
[[nodiscard]] inline double css_objective(std::span<const double> params,
                                          std::span<const double> w, const ArimaOrder& order) {
    const std::vector<double> eps = css_residuals(params, w, order);
    double ess = 0.0;
    for (double e : eps) ess += e * e;
    return ess;
}

/**
 * Analytic Jacobian of the residual vector with respect to the parameters,
 * row-major (len(w) x (p+q)), columns ordered phi_1..phi_p, theta_1..theta_q.
 * Derivatives follow the same conditional recursion as the residuals:
 *   d eps_t / d phi_a   = -w_{t-a}   + sum_j theta_j d eps_{t-j} / d phi_a
 *   d eps_t / d theta_b =  eps_{t-b} + sum_j theta_j d eps_{t-j} / d theta_b
 */
[[nodiscard]] inline std::vector<double> css_jacobian(std::span<const double> params,
                                                      std::span<const double> w,
                                                      const ArimaOrder& order) {
    const int p = order.p, q = order.q, k = p + q;
    if (static_cast<int>(params.size()) != k) {
        throw std::invalid_argument("arima: parameter vector must have length p + q");
    }
    const int m = static_cast<int>(w.size());
    std::vector<double> eps;
    detail::css_residuals_into(params, w, order, eps);

    std::vector<double> jac(static_cast<std::size_t>(m) * k, 0.0);
    for (int col = 0; col < k; ++col) {
        for (int t = 0; t < m; ++t) {
            double dv;
            if (col < p) {
                const int a = col + 1;
                dv = (t - a >= 0) ? -w[t - a] : 0.0;
            } else {
                const int b = col - p + 1;
                dv = (t - b >= 0) ? eps[t - b] : 0.0;
            }
            for (int j = 1; j <= q && j <= t; ++j) {
                dv += params[p + j - 1] * jac[static_cast<std::size_t>(t - j) * k + col];
            }
            jac[static_cast<std::size_t>(t) * k + col] = dv;
        }
    }
    return jac;
}

namespace detail {

// Standard errors from the Gauss-Newton Hessian: sqrt(mse * diag((J'J)^-1)).
// Returns an empty vector when the Hessian is singular.
inline std::vector<double> hessian_param_se(std::span<const double> params,
                                            std::span<const double> w, const ArimaOrder& order,
                                            double mse) {
    const int k = order.n_params();
    if (k == 0 || w.empty()) return {};
    const std::vector<double> jac = css_jacobian(params, w, order);
    std::vector<double> hess(static_cast<std::size_t>(k) * k, 0.0);
    for (std::size_t t = 0; t < w.size(); ++t) {
        for (int i = 0; i < k; ++i) {
            for (int j = i; j < k; ++j) hess[i * k + j] += jac[t * k + i] * jac[t * k + j];
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < i; ++j) hess[i * k + j] = hess[j * k + i];
    }
    std::vector<double> se(k);
    for (int col = 0; col < k; ++col) {
        std::vector<double> rhs(k, 0.0);
        rhs[col] = 1.0;
        try {
            const std::vector<double> x = solve_linear(hess, std::move(rhs));
            se[col] = std::sqrt(std::max(mse * x[col], 0.0));
        } catch (const numeric_error&) {
            return {};
        }
    }
    return se;
}

}  // namespace detail

/// One accepted optimizer step: iteration number, error sum of squares,
/// damping parameter in force when the step was taken, parameter vector.
struct IterationRecord {
    int itn = 0;
    double ess = 0.0;
    double lambda = 0.0;
    std::vector<double> params;
};

struct FitOptions {
    bool detrend = true;
    DateConvention date_convention = DateConvention::index_from_1;
    std::vector<double> init;  ///< empty: every parameter starts at 0.1
    int max_iter = 200;
    double tol = 1e-9;  ///< relative ESS change declaring convergence
    double lambda_init = 0.1;
    double lambda_decrease = 0.4;  ///< multiplier after an accepted step
    double lambda_increase = 10.0; ///< multiplier after a rejected step
};

/**
 * A fitted ARIMA model plus the context needed to forecast from it: the
 * detrended series, its d-th difference, and the in-sample residuals.
 *
 * n_effective is the divisor of the variance estimate, n_obs - d - p, so
 * that mse = rss / n_effective and rmse = sqrt(mse).
 */
struct ArimaFit {
    ArimaOrder order;
    std::vector<double> ar;
    std::vector<double> ma;
    double rss = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    std::size_t n_obs = 0;
    std::size_t n_effective = 0;
    std::vector<double> param_se;  ///< Hessian-based standard errors, phi then theta
    std::vector<IterationRecord> trace;
    bool converged = false;
    std::optional<TrendModel> trend;

    int start_year = 0;   ///< first observed year
    int origin_year = 0;  ///< last observed year; forecasts launch here
    std::vector<double> detrended;   ///< observed minus trend (or raw values)
    std::vector<double> differenced; ///< d-th difference of detrended
    std::vector<double> residuals;   ///< conditional residuals, aligned with differenced

    [[nodiscard]] std::vector<double> params() const {
        std::vector<double> v = ar;
        v.insert(v.end(), ma.begin(), ma.end());
        return v;
    }
};

/// Residuals as an annual series (they start d years after the data).
[[nodiscard]] inline AnnualSeries residual_series(const ArimaFit& fit) {
    return AnnualSeries(fit.start_year + fit.order.d, fit.residuals);
}

namespace detail {

inline bool params_admissible(std::span<const double> params, const ArimaOrder& order) {
    const std::span<const double> ar = params.subspan(0, order.p);
    const std::span<const double> ma = params.subspan(order.p, order.q);
    // MA stability is not part of the model contract but keeps the residual
    // recursion from diverging during the search.
    return poly_stable(ar) && poly_stable(ma);
}

}  // namespace detail

/**
 * Conditional-least-squares ARIMA fit via Levenberg-Marquardt.
 *
 * The series is optionally detrended (ordinary least squares on date), then
 * differenced d times; the CSS objective over the result is minimized with
 * a damped Gauss-Newton iteration. The damping parameter shrinks by
 * lambda_decrease on accepted steps and grows by lambda_increase on
 * rejections; steps leaving the AR stationarity region are rejected.
 * Non-convergence is reported through `converged`, not an exception.
 */
[[nodiscard]] inline ArimaFit fit_css_lm(const AnnualSeries& series, const ArimaOrder& order,
                                         const FitOptions& options = {}) {
    if (order.p < 0 || order.d < 0 || order.q < 0 || order.d > 2) {
        throw std::invalid_argument("arima: invalid order " + order.to_string());
    }
    const std::size_t n = series.size();
    if (static_cast<int>(n) <= order.p + order.q + order.d + 2) {
        throw insufficient_data_error("arima: series too short for order " + order.to_string());
    }

    ArimaFit fit;
    fit.order = order;
    fit.n_obs = n;
    fit.start_year = series.start_year;
    fit.origin_year = series.last_year();

    if (options.detrend) {
        auto [model, resid] = fit_trend(series, options.date_convention);
        fit.trend = model;
        fit.detrended = resid.values;
    } else {
        fit.detrended = series.values;
    }
    {
        AnnualSeries z(series.start_year, fit.detrended);
        fit.differenced = difference(z, order.d).values;
    }
    const std::span<const double> w(fit.differenced);

    const int k = order.n_params();
    std::vector<double> params;
    if (options.init.empty()) {
        params.assign(k, 0.1);
    } else {
        if (static_cast<int>(options.init.size()) != k) {
            throw std::invalid_argument("arima: init vector must have length p + q");
        }
        params = options.init;
    }
    if (k > 0 && !detail::params_admissible(params, order)) {
        throw std::invalid_argument("arima: initial parameters outside the stationary region");
    }

    double lambda = options.lambda_init;
    std::vector<double> eps;
    detail::css_residuals_into(params, w, order, eps);
    double ess = 0.0;
    for (double e : eps) ess += e * e;
    fit.trace.push_back({0, ess, lambda, params});

    if (k == 0) {
        fit.converged = true;
    } else {
        bool converged = false;
        for (int itn = 1; itn <= options.max_iter && !converged; ++itn) {
            const std::vector<double> jac = css_jacobian(params, w, order);
            std::vector<double> grad(k, 0.0);
            std::vector<double> hess(static_cast<std::size_t>(k) * k, 0.0);
            for (std::size_t t = 0; t < w.size(); ++t) {
                for (int i = 0; i < k; ++i) {
                    const double jt = jac[t * k + i];
                    grad[i] += jt * eps[t];
                    for (int j = i; j < k; ++j) hess[i * k + j] += jt * jac[t * k + j];
                }
            }
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < i; ++j) hess[i * k + j] = hess[j * k + i];
            }

            bool accepted = false;
            for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
                std::vector<double> damped = hess;
                for (int i = 0; i < k; ++i) {
                    damped[i * k + i] = hess[i * k + i] * (1.0 + lambda) + 1e-30;
                }
                std::vector<double> rhs(k);
                for (int i = 0; i < k; ++i) rhs[i] = -grad[i];
                std::vector<double> step;
                try {
                    step = solve_linear(std::move(damped), std::move(rhs));
                } catch (const numeric_error&) {
                    lambda *= options.lambda_increase;
                    continue;
                }
                std::vector<double> candidate(k);
                for (int i = 0; i < k; ++i) candidate[i] = params[i] + step[i];
                if (!detail::params_admissible(candidate, order)) {
                    lambda *= options.lambda_increase;
                    continue;
                }
                std::vector<double> cand_eps;
                detail::css_residuals_into(candidate, w, order, cand_eps);
                double cand_ess = 0.0;
                for (double e : cand_eps) cand_ess += e * e;
                if (cand_ess <= ess * (1.0 + options.tol)) {
                    const double rel_change = std::fabs(ess - cand_ess) / std::max(ess, 1e-300);
                    double step_norm = 0.0;
                    for (int i = 0; i < k; ++i) {
                        step_norm = std::max(step_norm, std::fabs(step[i]));
                    }
                    params = std::move(candidate);
                    eps = std::move(cand_eps);
                    ess = cand_ess;
                    fit.trace.push_back({itn, ess, lambda, params});
                    lambda = std::max(lambda * options.lambda_decrease, 1e-12);
                    accepted = true;
                    if (rel_change < options.tol || step_norm < 1e-12) converged = true;
                } else {
                    lambda *= options.lambda_increase;
                }
                if (lambda > 1e14) break;
            }
            if (!accepted) break;  // damping exhausted
        }
        fit.converged = converged;
    }

    fit.ar.assign(params.begin(), params.begin() + order.p);
    fit.ma.assign(params.begin() + order.p, params.end());
    fit.residuals = eps;
    fit.rss = ess;
    const long dof = static_cast<long>(n) - order.d - order.p;
    fit.n_effective = static_cast<std::size_t>(std::max<long>(dof, 1));
    fit.mse = fit.rss / static_cast<double>(fit.n_effective);
    fit.rmse = std::sqrt(fit.mse);
    fit.param_se = detail::hessian_param_se(params, w, order, fit.mse);
    return fit;
}

/**
 * Builds a fit object from known parameters instead of estimating them.
 * Residuals and forecast context are derived from the supplied series under
 * those parameters. Used for prefitted parameter blocks and for isolating
 * the interval machinery in validation runs.
 */
[[nodiscard]] inline ArimaFit fit_from_parameters(const AnnualSeries& series,
                                                  const ArimaOrder& order,
                                                  std::vector<double> ar, std::vector<double> ma,
                                                  double rmse,
                                                  std::optional<TrendModel> trend = {}) {
    if (static_cast<int>(ar.size()) != order.p || static_cast<int>(ma.size()) != order.q) {
        throw std::invalid_argument("arima: coefficient counts must match the order");
    }
    if (!poly_stable(ar)) {
        throw std::invalid_argument("arima: AR coefficients outside the stationary region");
    }
    if (!(rmse >= 0.0)) throw std::invalid_argument("arima: rmse must be nonnegative");

    ArimaFit fit;
    fit.order = order;
    fit.ar = std::move(ar);
    fit.ma = std::move(ma);
    fit.n_obs = series.size();
    fit.start_year = series.start_year;
    fit.origin_year = series.last_year();
    fit.trend = trend;
    fit.converged = true;

    fit.detrended = series.values;
    if (trend) {
        for (std::size_t i = 0; i < fit.detrended.size(); ++i) {
            fit.detrended[i] -= trend->value_at(series.year_at(i));
        }
    }
    {
        AnnualSeries z(series.start_year, fit.detrended);
        fit.differenced = difference(z, order.d).values;
    }
    fit.residuals = css_residuals(fit.params(), fit.differenced, order);

    const long dof = static_cast<long>(fit.n_obs) - order.d - order.p;
    fit.n_effective = static_cast<std::size_t>(std::max<long>(dof, 1));
    fit.rmse = rmse;
    fit.mse = rmse * rmse;
    fit.rss = fit.mse * static_cast<double>(fit.n_effective);
    fit.param_se = detail::hessian_param_se(fit.params(), fit.differenced, order, fit.mse);
    return fit;
}

/**
 * Psi-weights of the integrated model: coefficients of the infinite
 * moving-average representation of (1 - sum phi_i B^i)(1-B)^d w = theta(B) e.
 * psi_0 = 1; forecast error variance at horizon h is the innovation variance
 * times a partial sum of squared psi-weights.
 */
[[nodiscard]] inline std::vector<double> psi_weights(const ArimaOrder& order,
                                                     std::span<const double> ar,
                                                     std::span<const double> ma, int h_max) {
    if (h_max < 0) throw std::invalid_argument("arima: psi_weights needs h_max >= 0");
    if (static_cast<int>(ar.size()) != order.p || static_cast<int>(ma.size()) != order.q) {
        throw std::invalid_argument("arima: coefficient counts must match the order");
    }
    if (!poly_stable(ar)) {
        throw std::invalid_argument("arima: psi_weights requires a stationary AR part");
    }
    // Expand (1 - sum phi_i B^i)(1-B)^d into 1 - sum c_i B^i.
    std::vector<double> poly(order.p + 1, 0.0);
    poly[0] = 1.0;
    for (int i = 1; i <= order.p; ++i) poly[i] = -ar[i - 1];
    for (int round = 0; round < order.d; ++round) {
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + 1] -= poly[i];
        }
        poly = std::move(next);
    }
    const int pd = static_cast<int>(poly.size()) - 1;
    std::vector<double> c(pd);
    for (int i = 1; i <= pd; ++i) c[i - 1] = -poly[i];

    std::vector<double> psi(static_cast<std::size_t>(h_max) + 1, 0.0);
    psi[0] = 1.0;
    for (int j = 1; j <= h_max; ++j) {
        double v = (j <= order.q) ? -ma[j - 1] : 0.0;
        for (int i = 1; i <= pd && i <= j; ++i) v += c[i - 1] * psi[j - i];
        psi[j] = v;
    }
    return psi;
}

/// Forecast standard error at horizon h: rmse times the root of the psi
/// partial sum j = 0 .. h-1+offset. Offset 1 widens by one extra term.
[[nodiscard]] inline double se_at_horizon(const ArimaOrder& order, std::span<const double> ar,
                                          std::span<const double> ma, double rmse, int horizon,
                                          int variance_lag_offset = 1) {
    if (horizon < 1) throw std::invalid_argument("arima: horizon must be positive");
    if (variance_lag_offset != 0 && variance_lag_offset != 1) {
        throw std::invalid_argument("arima: variance_lag_offset must be 0 or 1");
    }
    const std::vector<double> psi = psi_weights(order, ar, ma, horizon - 1 + variance_lag_offset);
    double s = 0.0;
    for (double v : psi) s += v * v;
    return rmse * std::sqrt(s);
}

/// Per-year forecast: mean, standard error, and symmetric Gaussian bounds
/// per confidence level.
struct ForecastBand {
    int year = 0;
    int horizon = 0;
    double mean = 0.0;
    double se = 0.0;
    std::map<double, std::pair<double, double>> intervals;  ///< level -> (lower, upper)

    [[nodiscard]] std::pair<double, double> interval(double level) const {
        const auto it = intervals.find(level);
        if (it == intervals.end()) {
            throw std::invalid_argument("arima: no interval at the requested level");
        }
        return it->second;
    }
};

/**
 * h-step forecasts with analytic prediction intervals.
 *
 * The mean is the recursive point forecast on the differenced scale,
 * integrated back and recombined with the trend. Bounds are mean +/- z * se
 * with z the two-sided Gaussian quantile per level (overridable per level
 * through `level_multipliers`).
 */
[[nodiscard]] inline std::vector<ForecastBand> forecast(
    const ArimaFit& fit, int origin_year, std::span<const int> horizons,
    std::span<const double> levels, int variance_lag_offset = 1,
    const std::map<double, double>& level_multipliers = {},
    bool allow_nonconverged = false) {
    if (horizons.empty()) return {};
    if (!fit.converged && !allow_nonconverged) {
        throw numeric_error("arima: refusing to forecast from a non-converged fit");
    }
    if (origin_year != fit.origin_year) {
        throw std::invalid_argument("arima: forecast origin must be the fitted series end (" +
                                    std::to_string(fit.origin_year) + ")");
    }
    int h_max = 0;
    for (int h : horizons) {
        if (h < 1) throw std::invalid_argument("arima: horizon must be positive");
        h_max = std::max(h_max, h);
    }
    for (double lv : levels) {
        if (!(lv > 0.0 && lv < 1.0)) {
            throw std::invalid_argument("arima: confidence levels must lie in (0,1)");
        }
    }
    if (variance_lag_offset != 0 && variance_lag_offset != 1) {
        throw std::invalid_argument("arima: variance_lag_offset must be 0 or 1");
    }

    const int p = fit.order.p, q = fit.order.q, d = fit.order.d;

    // Point forecasts on the differenced scale, then integrate d times.
    const std::vector<double>& w = fit.differenced;
    const std::vector<double>& eps = fit.residuals;
    const int m = static_cast<int>(w.size());
    std::vector<double> wf(h_max);
    for (int ell = 1; ell <= h_max; ++ell) {
        double v = 0.0;
        for (int i = 1; i <= p; ++i) {
            const int idx = ell - i;  // index into the forecast horizon
            v += fit.ar[i - 1] * (idx >= 1 ? wf[idx - 1] : w[m + idx - 1]);
        }
        for (int j = 1; j <= q; ++j) {
            const int idx = ell - j;
            if (idx < 1 && m + idx - 1 >= 0) v -= fit.ma[j - 1] * eps[m + idx - 1];
        }
        wf[ell - 1] = v;
    }
    // Integration tails: last value of each successive difference of the
    // detrended series, from stage d-1 down to stage 0.
    std::vector<double> zf = wf;
    {
        std::vector<double> stage = fit.detrended;
        std::vector<double> tails;  // tails[s] = last value at stage s
        tails.push_back(stage.back());
        for (int s = 1; s < d; ++s) {
            for (std::size_t i = 0; i + 1 < stage.size(); ++i) stage[i] = stage[i + 1] - stage[i];
            stage.pop_back();
            tails.push_back(stage.back());
        }
        for (int s = d - 1; s >= 0; --s) {
            double acc = tails[s];
            for (int ell = 0; ell < h_max; ++ell) {
                acc += zf[ell];
                zf[ell] = acc;
            }
        }
    }

    const std::vector<double> psi =
        psi_weights(fit.order, fit.ar, fit.ma, h_max - 1 + variance_lag_offset);
    std::vector<double> cum_psi_sq(psi.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        acc += psi[j] * psi[j];
        cum_psi_sq[j] = acc;
    }

    std::vector<ForecastBand> bands;
    bands.reserve(horizons.size());
    for (int h : horizons) {
        ForecastBand band;
        band.horizon = h;
        band.year = origin_year + h;
        band.mean = zf[h - 1];
        if (fit.trend) band.mean += fit.trend->value_at(band.year);
        band.se = fit.rmse * std::sqrt(cum_psi_sq[h - 1 + variance_lag_offset]);
        for (double lv : levels) {
            const auto it = level_multipliers.find(lv);
            const double z = (it != level_multipliers.end()) ? it->second : two_sided_z(lv);
            band.intervals[lv] = {band.mean - z * band.se, band.mean + z * band.se};
        }
        bands.push_back(std::move(band));
    }
    return bands;
}

/// Pseudo R-squared in percent: 100 (1 - rss / TSS) over the original,
/// undifferenced series.
[[nodiscard]] inline double pseudo_r2(const ArimaFit& fit, const AnnualSeries& original) {
    double mean = 0.0;
    for (double v : original.values) mean += v;
    mean /= static_cast<double>(original.size());
    double tss = 0.0;
    for (double v : original.values) tss += (v - mean) * (v - mean);
    if (tss <= 0.0) {
        throw degenerate_series_error("arima: pseudo R-squared of a zero-variance series");
    }
    return 100.0 * (1.0 - fit.rss / tss);
}

/// Residual diagnostics: autocorrelations with their significance band and
/// the Ljung-Box portmanteau test. The model is flagged adequate only when
/// the test passes at `alpha` and no autocorrelation exceeds the band.
struct DiagnosticsReport {
    AcfResult residual_acf;
    LjungBoxResult ljung_box;
    double alpha = 0.05;
    bool adequate = false;
};

[[nodiscard]] inline DiagnosticsReport diagnose(const ArimaFit& fit,
                                                const AnnualSeries& residuals,
                                                std::size_t max_lag, double alpha = 0.05) {
    DiagnosticsReport report;
    report.alpha = alpha;
    report.residual_acf = acf(residuals, max_lag);
    report.ljung_box =
        ljung_box(report.residual_acf.correlations, residuals.size(), max_lag,
                  static_cast<std::size_t>(fit.order.n_params()));
    bool within_band = true;
    for (double r : report.residual_acf.correlations) {
        if (std::fabs(r) > report.residual_acf.band) within_band = false;
    }
    report.adequate = (report.ljung_box.p_value > alpha) && within_band;
    return report;
}

struct SearchLimits {
    int max_p = 2;
    int max_d = 2;
    int max_q = 2;
};

struct SearchResult {
    ArimaOrder order;
    ArimaFit fit;
    DiagnosticsReport diagnostics;
    bool adequate = false;
    std::vector<std::string> notes;  ///< warnings (fallback selection, skipped candidates)
};

/**
 * Smallest-adequate-model search.
 *
 * The differencing degree is fixed first as the minimum d whose d-th
 * difference rejects the unit root (falling back to the full grid when no
 * d does). Candidates are then visited in ascending (d, p+q, p) order and
 * the first adequate one wins; if none is adequate the candidate with the
 * highest Ljung-Box p-value is returned with a warning note.
 */
[[nodiscard]] inline SearchResult model_search(const AnnualSeries& series,
                                               const SearchLimits& limits = {},
                                               double alpha = 0.05,
                                               const FitOptions& options = {},
                                               std::size_t diag_lags = 5,
                                               std::size_t adf_lag_order = 1) {
    // ADF runs on what the ARIMA will actually see.
    const AnnualSeries* base = &series;
    std::optional<AnnualSeries> detrended_storage;
    if (options.detrend) {
        detrended_storage = fit_trend(series, options.date_convention).second;
        base = &*detrended_storage;
    }

    std::vector<int> d_grid;
    for (int d = 0; d <= limits.max_d; ++d) {
        try {
            if (adf_test(difference(*base, d), adf_lag_order).reject_unit_root) {
                d_grid = {d};
                break;
            }
        } catch (const insufficient_data_error&) {
            break;  // series too short to keep differencing
        } catch (const error&) {
            continue;  // test inconclusive at this d (e.g. singular regression)
        }
    }
    std::vector<std::string> notes;
    if (d_grid.empty()) {
        for (int d = 0; d <= limits.max_d; ++d) d_grid.push_back(d);
        notes.push_back("search: unit-root test inconclusive at every d; searching the full grid");
    }

    std::optional<SearchResult> best;
    std::vector<std::string> statuses;
    for (int d : d_grid) {
        for (int sum_pq = 0; sum_pq <= limits.max_p + limits.max_q; ++sum_pq) {
            for (int p = 0; p <= std::min(sum_pq, limits.max_p); ++p) {
                const int q = sum_pq - p;
                if (q > limits.max_q) continue;
                const ArimaOrder order{p, d, q};
                try {
                    ArimaFit fit = fit_css_lm(series, order, options);
                    const AnnualSeries resid = residual_series(fit);
                    const std::size_t lags =
                        std::min<std::size_t>(diag_lags, resid.size() > 1 ? resid.size() - 1 : 1);
                    DiagnosticsReport diag = diagnose(fit, resid, lags, alpha);
                    if (diag.adequate) {
                        return SearchResult{order, std::move(fit), std::move(diag), true,
                                            std::move(notes)};
                    }
                    if (!best || diag.ljung_box.p_value > best->diagnostics.ljung_box.p_value) {
                        best = SearchResult{order, std::move(fit), std::move(diag), false, {}};
                    }
                    statuses.push_back(order.to_string() + ": not adequate");
                } catch (const error& e) {
                    statuses.push_back(order.to_string() + ": " + e.what());
                } catch (const std::invalid_argument& e) {
                    statuses.push_back(order.to_string() + ": " + e.what());
                }
            }
        }
    }
    if (!best) {
        std::string msg = "arima: model search failed for every candidate:";
        for (const auto& s : statuses) msg += "\n  " + s;
        throw numeric_error(msg);
    }
    notes.push_back("search: no candidate was adequate; keeping " + best->order.to_string() +
                    " (highest Ljung-Box p-value " +
                    std::to_string(best->diagnostics.ljung_box.p_value) + ")");
    best->notes = std::move(notes);
    return *best;
}

}  // namespace popbands
