#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "popbands/errors.hpp"

namespace popbands {

/**
 * Two-sided Gaussian quantile and tail machinery shared by the interval
 * construction, the diagnostics, and the path simulator. Everything here is
 * deterministic and allocation-free so results are reproducible bit for bit
 * across runs and thread schedules.
 */

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximation, accurate to ~1e-15 over (0,1)).
[[nodiscard]] inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("mathfn: normal_quantile requires p in (0,1)");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                      6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                    1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                  1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return (q < 0.0) ? -val : val;
}

/// z multiplier for a two-sided interval at the given confidence level,
/// e.g. 0.95 -> 1.959964.
[[nodiscard]] inline double two_sided_z(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("mathfn: confidence level must lie in (0,1)");
    }
    return normal_quantile(0.5 + level / 2.0);
}

namespace detail {

// Regularized lower incomplete gamma P(a,x) by power series (x < a+1).
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by modified Lentz continued
// fraction (x >= a+1).
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
[[nodiscard]] inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) {
        throw std::invalid_argument("mathfn: gamma_q requires a > 0, x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

/// Upper-tail probability of a chi-square(df) variate at x.
[[nodiscard]] inline double chi_squared_upper_tail(double x, std::size_t df) {
    if (df == 0) throw std::invalid_argument("mathfn: chi-square df must be positive");
    if (x <= 0.0) return 1.0;
    return gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

/// Solves the dense system A x = b in place (Gauss-Jordan with partial
/// pivoting). A is n x n row-major. Throws on a numerically singular system.
[[nodiscard]] inline std::vector<double> solve_linear(std::vector<double> a,
                                                      std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) {
        throw std::invalid_argument("mathfn: solve_linear dimension mismatch");
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        }
        if (std::fabs(a[pivot * n + col]) < 1e-300) {
            throw numeric_error("mathfn: singular linear system");
        }
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[pivot * n + k], a[col * n + k]);
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a[r * n + col] * inv;
            if (factor == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[r * n + k] -= factor * a[col * n + k];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i * n + i];
    return x;
}

/// Ordinary least squares of y on the given regressor columns.
struct OlsFit {
    std::vector<double> beta;       ///< coefficient per column
    std::vector<double> se;         ///< standard error per coefficient
    std::vector<double> residuals;  ///< y - X beta
    double s2 = 0.0;                ///< residual variance (df-corrected)
};

[[nodiscard]] inline OlsFit fit_ols(const std::vector<std::vector<double>>& columns,
                                    std::span<const double> y) {
    const std::size_t k = columns.size();
    const std::size_t n = y.size();
    if (k == 0 || n == 0) throw std::invalid_argument("mathfn: empty OLS problem");
    for (const auto& c : columns) {
        if (c.size() != n) throw std::invalid_argument("mathfn: ragged OLS columns");
    }
    if (n <= k) throw insufficient_data_error("mathfn: OLS needs more rows than columns");

    std::vector<double> xtx(k * k, 0.0);
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * columns[j][t];
            xtx[i * k + j] = s;
            xtx[j * k + i] = s;
        }
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * y[t];
        xty[i] = s;
    }

    // Invert XtX column by column; small k, so the extra solves are cheap.
    OlsFit fit;
    fit.beta = solve_linear(xtx, xty);
    std::vector<double> inv_diag(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> e(k, 0.0);
        e[j] = 1.0;
        inv_diag[j] = solve_linear(xtx, std::move(e))[j];
    }

    fit.residuals.resize(n);
    double rss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double fitted = 0.0;
        for (std::size_t j = 0; j < k; ++j) fitted += fit.beta[j] * columns[j][t];
        fit.residuals[t] = y[t] - fitted;
        rss += fit.residuals[t] * fit.residuals[t];
    }
    fit.s2 = rss / static_cast<double>(n - k);
    fit.se.resize(k);
    for (std::size_t j = 0; j < k; ++j) fit.se[j] = std::sqrt(fit.s2 * inv_diag[j]);
    return fit;
}

/// Counter-style 64-bit generator (splitmix64). Used everywhere randomness
/// is needed so that streams depend only on the seed, not on the platform's
/// distribution implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double strictly inside (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw via the inverse-CDF transform.
    double next_gaussian() { return normal_quantile(next_uniform()); }

private:
    std::uint64_t state_;
};

/// Stated mix function for deriving per-stream seeds from (master, index).
/// Pure function of its inputs, so parallel or reordered execution cannot
/// change any stream.
[[nodiscard]] inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a 64-bit digest, used for input provenance stamps.
[[nodiscard]] inline std::uint64_t fnv1a64(std::span<const char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace popbands
