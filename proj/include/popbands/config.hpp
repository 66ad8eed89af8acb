#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popbands/arima.hpp"
#include "popbands/csv.hpp"
#include "popbands/errors.hpp"
#include "popbands/trend.hpp"

namespace popbands {

/**
 * Pipeline settings, normally read from a flat `key = value` file with `#`
 * comments. Unknown keys are rejected rather than ignored so that typos
 * cannot silently fall back to defaults.
 *
 * The bypass_* block substitutes externally estimated model parameters for
 * the fitting stage; bypass_means and bypass_bounds additionally pin the
 * printed table values so published results can be reproduced digit for
 * digit from their rounded inputs.
 */
struct PipelineConfig {
    std::string series_path;
    std::string points_path;
    double land_area_km2 = 0.0;  ///< 0 means "not set"; required for count inputs
    int origin_year = 0;  ///< projection launch year; 0 derives it from the series end
    std::vector<double> levels{0.95};
    std::vector<int> target_years;
    int horizon = 0;  ///< chart horizon; 0 derives it from the target years
    std::optional<ArimaOrder> order;  ///< fixed order; empty triggers the search
    bool detrend = true;
    bool allow_nonconverged = false;
    DateConvention date_convention = DateConvention::index_from_1;
    int variance_lag_offset = 1;
    double alpha = 0.05;
    SearchLimits limits;
    std::size_t diag_lags = 5;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 7861520;
    std::map<double, double> level_multipliers;  ///< level -> interval z override

    std::optional<ArimaOrder> bypass_order;
    std::vector<double> bypass_ar;
    std::vector<double> bypass_ma;
    double bypass_rmse = -1.0;
    std::map<int, double> bypass_means;  ///< year -> mean density
    /// level -> year -> (lower, upper) density bounds taken as printed
    std::map<double, std::map<int, std::pair<double, double>>> bypass_bounds;

    [[nodiscard]] bool bypass_requested() const { return bypass_order.has_value(); }
};

namespace detail {

[[nodiscard]] inline std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(sep, start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view item = trim(text.substr(start, end - start));
        if (!item.empty()) items.emplace_back(item);
        if (end == text.size()) break;
        start = end + 1;
    }
    return items;
}

[[nodiscard]] inline double config_double(const std::string& value, const std::string& key) {
    std::size_t consumed = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != value.size() || value.empty() || !std::isfinite(out)) {
        throw config_error("config: key '" + key + "' needs a number, got \"" + value + "\"");
    }
    return out;
}

[[nodiscard]] inline long config_long(const std::string& value, const std::string& key) {
    std::size_t consumed = 0;
    long out = 0;
    try {
        out = std::stol(value, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != value.size() || value.empty()) {
        throw config_error("config: key '" + key + "' needs an integer, got \"" + value + "\"");
    }
    return out;
}

[[nodiscard]] inline bool config_bool(const std::string& value, const std::string& key) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw config_error("config: key '" + key + "' needs true or false, got \"" + value + "\"");
}

[[nodiscard]] inline ArimaOrder config_order(const std::string& value, const std::string& key) {
    const std::vector<std::string> parts = split_list(value, ',');
    if (parts.size() != 3) {
        throw config_error("config: key '" + key + "' needs \"p,d,q\", got \"" + value + "\"");
    }
    ArimaOrder order;
    order.p = static_cast<int>(config_long(parts[0], key));
    order.d = static_cast<int>(config_long(parts[1], key));
    order.q = static_cast<int>(config_long(parts[2], key));
    if (order.p < 0 || order.q < 0 || order.d < 0 || order.d > 2) {
        throw config_error("config: key '" + key + "' has an invalid order " + order.to_string());
    }
    return order;
}

[[nodiscard]] inline std::vector<double> config_doubles(const std::string& value,
                                                        const std::string& key) {
    std::vector<double> out;
    for (const std::string& item : split_list(value, ',')) {
        out.push_back(config_double(item, key));
    }
    return out;
}

/// Matches a percent suffix such as "95" in level_multiplier_95 to one of
/// the configured confidence levels.
[[nodiscard]] inline double resolve_level_pct(long pct, std::span<const double> levels,
                                              const std::string& key) {
    for (double lv : levels) {
        if (std::llround(lv * 100.0) == pct) return lv;
    }
    throw config_error("config: key '" + key + "' names the " + std::to_string(pct) +
                       "% level, which is not in 'levels'");
}

}  // namespace detail

/**
 * Parses configuration text. `name` labels error messages (usually the file
 * path). Structural and range validation happen here; checks that need the
 * data (for example target years versus the series end) happen in the
 * pipeline.
 */
[[nodiscard]] inline PipelineConfig parse_config_text(std::string_view text,
                                                      const std::string& name) {
    PipelineConfig cfg;
    bool levels_set = false;
    std::set<std::string> seen;
    std::map<long, double> multiplier_pct;
    std::map<long, std::string> bounds_pct;

    const std::vector<std::string_view> lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw config_error(name + ":" + std::to_string(i + 1) +
                               ": expected \"key = value\"");
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw config_error(name + ":" + std::to_string(i + 1) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw config_error(name + ":" + std::to_string(i + 1) + ": duplicate key '" + key +
                               "'");
        }

        if (key == "series") {
            cfg.series_path = value;
        } else if (key == "points") {
            cfg.points_path = value;
        } else if (key == "land_area_km2") {
            cfg.land_area_km2 = detail::config_double(value, key);
            if (!(cfg.land_area_km2 > 0.0)) {
                throw config_error("config: land_area_km2 must be positive");
            }
        } else if (key == "origin_year") {
            cfg.origin_year = static_cast<int>(detail::config_long(value, key));
        } else if (key == "rounding") {
            if (value != "nearest") {
                throw config_error("config: only rounding = nearest is supported");
            }
        } else if (key == "allow_nonconverged") {
            cfg.allow_nonconverged = detail::config_bool(value, key);
        } else if (key == "levels") {
            cfg.levels = detail::config_doubles(value, key);
            levels_set = true;
        } else if (key == "target_years") {
            cfg.target_years.clear();
            for (const std::string& item : detail::split_list(value, ',')) {
                cfg.target_years.push_back(static_cast<int>(detail::config_long(item, key)));
            }
        } else if (key == "horizon") {
            cfg.horizon = static_cast<int>(detail::config_long(value, key));
            if (cfg.horizon < 1) throw config_error("config: horizon must be positive");
        } else if (key == "order") {
            cfg.order = detail::config_order(value, key);
        } else if (key == "detrend") {
            cfg.detrend = detail::config_bool(value, key);
        } else if (key == "date_convention") {
            if (value == "index_from_1") {
                cfg.date_convention = DateConvention::index_from_1;
            } else if (value == "calendar_year") {
                cfg.date_convention = DateConvention::calendar_year;
            } else {
                throw config_error(
                    "config: date_convention must be index_from_1 or calendar_year");
            }
        } else if (key == "variance_lag_offset") {
            cfg.variance_lag_offset = static_cast<int>(detail::config_long(value, key));
            if (cfg.variance_lag_offset != 0 && cfg.variance_lag_offset != 1) {
                throw config_error("config: variance_lag_offset must be 0 or 1");
            }
        } else if (key == "alpha") {
            cfg.alpha = detail::config_double(value, key);
            if (!(cfg.alpha > 0.0 && cfg.alpha <= 0.5)) {
                throw config_error("config: alpha must lie in (0, 0.5]");
            }
        } else if (key == "max_p") {
            cfg.limits.max_p = static_cast<int>(detail::config_long(value, key));
        } else if (key == "max_d") {
            cfg.limits.max_d = static_cast<int>(detail::config_long(value, key));
        } else if (key == "max_q") {
            cfg.limits.max_q = static_cast<int>(detail::config_long(value, key));
        } else if (key == "diag_lags") {
            const long lags = detail::config_long(value, key);
            if (lags < 1) throw config_error("config: diag_lags must be positive");
            cfg.diag_lags = static_cast<std::size_t>(lags);
        } else if (key == "n_paths") {
            const long n = detail::config_long(value, key);
            if (n < 1) throw config_error("config: n_paths must be positive");
            cfg.n_paths = static_cast<std::size_t>(n);
        } else if (key == "seed") {
            try {
                std::size_t consumed = 0;
                cfg.seed = std::stoull(value, &consumed);
                if (consumed != value.size() || value.empty()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw config_error("config: key 'seed' needs an unsigned integer, got \"" +
                                   value + "\"");
            }
        } else if (key.starts_with("level_multiplier_")) {
            const long pct = detail::config_long(key.substr(17), key);
            const double mult = detail::config_double(value, key);
            if (!(mult > 0.0)) throw config_error("config: interval multipliers must be positive");
            multiplier_pct[pct] = mult;
        } else if (key == "bypass_order") {
            cfg.bypass_order = detail::config_order(value, key);
        } else if (key == "bypass_ar") {
            cfg.bypass_ar = detail::config_doubles(value, key);
        } else if (key == "bypass_ma") {
            cfg.bypass_ma = detail::config_doubles(value, key);
        } else if (key == "bypass_rmse") {
            cfg.bypass_rmse = detail::config_double(value, key);
            if (!(cfg.bypass_rmse >= 0.0)) {
                throw config_error("config: bypass_rmse must be nonnegative");
            }
        } else if (key == "bypass_means") {
            for (const std::string& item : detail::split_list(value, ',')) {
                const std::vector<std::string> parts = detail::split_list(item, ':');
                if (parts.size() != 2) {
                    throw config_error("config: bypass_means items must be \"year:value\"");
                }
                const int year = static_cast<int>(detail::config_long(parts[0], key));
                cfg.bypass_means[year] = detail::config_double(parts[1], key);
            }
        } else if (key.starts_with("bypass_bounds_")) {
            const long pct = detail::config_long(key.substr(14), key);
            bounds_pct[pct] = value;
        } else {
            throw config_error(name + ":" + std::to_string(i + 1) + ": unknown key '" + key +
                               "'");
        }
    }

    if (cfg.levels.empty()) throw config_error("config: levels must not be empty");
    for (double lv : cfg.levels) {
        if (!(lv > 0.0 && lv < 1.0)) {
            throw config_error("config: confidence levels must lie in (0,1)");
        }
    }
    {
        std::vector<double> sorted_levels = cfg.levels;
        std::sort(sorted_levels.begin(), sorted_levels.end());
        if (std::adjacent_find(sorted_levels.begin(), sorted_levels.end()) !=
            sorted_levels.end()) {
            throw config_error("config: confidence levels must be distinct");
        }
    }
    (void)levels_set;
    {
        std::vector<int> sorted_years = cfg.target_years;
        std::sort(sorted_years.begin(), sorted_years.end());
        if (std::adjacent_find(sorted_years.begin(), sorted_years.end()) != sorted_years.end()) {
            throw config_error("config: target_years must be distinct");
        }
        cfg.target_years = std::move(sorted_years);
    }
    if (cfg.origin_year != 0) {
        for (int year : cfg.target_years) {
            if (year <= cfg.origin_year) {
                throw config_error("config: target year " + std::to_string(year) +
                                   " is not after origin_year " +
                                   std::to_string(cfg.origin_year));
            }
        }
    }

    for (const auto& [pct, mult] : multiplier_pct) {
        cfg.level_multipliers[detail::resolve_level_pct(
            pct, cfg.levels, "level_multiplier_" + std::to_string(pct))] = mult;
    }
    for (const auto& [pct, value] : bounds_pct) {
        const std::string key = "bypass_bounds_" + std::to_string(pct);
        const double level = detail::resolve_level_pct(pct, cfg.levels, key);
        for (const std::string& item : detail::split_list(value, ',')) {
            const std::vector<std::string> parts = detail::split_list(item, ':');
            if (parts.size() != 3) {
                throw config_error("config: " + key + " items must be \"year:lower:upper\"");
            }
            const int year = static_cast<int>(detail::config_long(parts[0], key));
            const double lower = detail::config_double(parts[1], key);
            const double upper = detail::config_double(parts[2], key);
            if (!(lower <= upper)) {
                throw config_error("config: " + key + " has lower > upper for year " +
                                   std::to_string(year));
            }
            cfg.bypass_bounds[level][year] = {lower, upper};
        }
    }

    // Bypass block consistency.
    const bool any_bypass = cfg.bypass_order.has_value() || !cfg.bypass_ar.empty() ||
                            !cfg.bypass_ma.empty() || cfg.bypass_rmse >= 0.0 ||
                            !cfg.bypass_means.empty() || !cfg.bypass_bounds.empty();
    if (any_bypass) {
        if (!cfg.bypass_order) {
            throw config_error("config: bypass_* keys require bypass_order");
        }
        if (static_cast<int>(cfg.bypass_ar.size()) != cfg.bypass_order->p ||
            static_cast<int>(cfg.bypass_ma.size()) != cfg.bypass_order->q) {
            throw config_error("config: bypass coefficient counts must match bypass_order");
        }
        if (cfg.bypass_rmse < 0.0) {
            throw config_error("config: bypass_order requires bypass_rmse");
        }
        for (const auto& [level, by_year] : cfg.bypass_bounds) {
            for (const auto& [year, bounds] : by_year) {
                if (!cfg.bypass_means.contains(year)) {
                    throw config_error(
                        "config: bypass bounds for year " + std::to_string(year) +
                        " need a matching bypass_means entry");
                }
            }
        }
    }
    return cfg;
}

/// Loads and parses a configuration file.
[[nodiscard]] inline PipelineConfig load_config(const std::string& path) {
    return parse_config_text(detail::read_text_file(path), path);
}

}  // namespace popbands
