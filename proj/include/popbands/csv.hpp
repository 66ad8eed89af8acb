#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popbands/bridge.hpp"
#include "popbands/errors.hpp"
#include "popbands/series.hpp"

namespace popbands {

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[nodiscard]] inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw io_error("failed reading " + path);
    std::string text = buffer.str();
    if (text.size() >= 3 && text[0] == '\xEF' && text[1] == '\xBB' && text[2] == '\xBF') {
        text.erase(0, 3);  // UTF-8 byte order mark
    }
    return text;
}

/// Splits into lines, tolerating CRLF and a missing final newline.
[[nodiscard]] inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

[[nodiscard]] inline long parse_long(std::string_view field, const std::string& path,
                                     std::size_t line_no, const char* what) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw data_error(path + ":" + std::to_string(line_no) + ": expected an integer " + what +
                         ", got \"" + std::string(field) + "\"");
    }
    return value;
}

[[nodiscard]] inline double parse_double(std::string_view field, const std::string& path,
                                         std::size_t line_no, const char* what) {
    const std::string owned(field);
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(owned, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != owned.size() || owned.empty() || !std::isfinite(value)) {
        throw data_error(path + ":" + std::to_string(line_no) + ": expected a number for " +
                         what + ", got \"" + std::string(field) + "\"");
    }
    return value;
}

}  // namespace detail

/// Result of loading an annual series file: the values and whether the
/// second column already holds densities (header "density") or raw
/// population counts (header "population").
struct SeriesCsv {
    AnnualSeries series{0, {1.0}};
    bool is_density = false;
};

/**
 * Loads `year,population` or `year,density` rows. Years must be consecutive
 * and strictly increasing; values must be positive. Blank lines are ignored;
 * any other irregularity raises data_error naming the offending line.
 */
[[nodiscard]] inline SeriesCsv load_series_csv(const std::string& path) {
    const std::string text = detail::read_text_file(path);
    const std::vector<std::string_view> lines = detail::split_lines(text);

    bool header_seen = false;
    bool is_density = false;
    int start_year = 0;
    int expected_year = 0;
    std::vector<double> values;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (detail::trim(lines[i]).empty()) continue;
        const std::vector<std::string_view> fields = detail::split_csv_line(lines[i]);
        if (!header_seen) {
            if (fields.size() != 2 || fields[0] != "year" ||
                (fields[1] != "population" && fields[1] != "density")) {
                throw data_error(path + ":" + std::to_string(line_no) +
                                 ": header must be \"year,population\" or \"year,density\"");
            }
            is_density = (fields[1] == "density");
            header_seen = true;
            continue;
        }
        if (fields.size() != 2) {
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 2 fields, got " +
                             std::to_string(fields.size()));
        }
        const long year = detail::parse_long(fields[0], path, line_no, "year");
        const double value = detail::parse_double(fields[1], path, line_no, "the value column");
        if (!(value > 0.0)) {
            throw data_error(path + ":" + std::to_string(line_no) +
                             ": series values must be positive");
        }
        if (values.empty()) {
            start_year = static_cast<int>(year);
        } else if (year != expected_year) {
            throw data_error(path + ":" + std::to_string(line_no) + ": year " +
                             std::to_string(year) + " breaks the annual sequence (expected " +
                             std::to_string(expected_year) + ")");
        }
        expected_year = static_cast<int>(year) + 1;
        values.push_back(value);
    }
    if (!header_seen) throw data_error(path + ": file is empty");
    if (values.empty()) throw data_error(path + ": no data rows");
    return SeriesCsv{AnnualSeries(start_year, std::move(values)), is_density};
}

/**
 * Loads `year,forecast` rows of external point forecasts. Years need not be
 * consecutive but must be distinct; forecasts must be positive. A file with
 * a header and no rows is legal and yields an empty vector.
 */
[[nodiscard]] inline std::vector<PointForecast> load_points_csv(const std::string& path) {
    const std::string text = detail::read_text_file(path);
    const std::vector<std::string_view> lines = detail::split_lines(text);

    bool header_seen = false;
    std::vector<PointForecast> points;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (detail::trim(lines[i]).empty()) continue;
        const std::vector<std::string_view> fields = detail::split_csv_line(lines[i]);
        if (!header_seen) {
            if (fields.size() != 2 || fields[0] != "year" || fields[1] != "forecast") {
                throw data_error(path + ":" + std::to_string(line_no) +
                                 ": header must be \"year,forecast\"");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 2) {
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 2 fields, got " +
                             std::to_string(fields.size()));
        }
        const long year = detail::parse_long(fields[0], path, line_no, "year");
        const double value = detail::parse_double(fields[1], path, line_no, "the forecast");
        if (!(value > 0.0)) {
            throw data_error(path + ":" + std::to_string(line_no) +
                             ": point forecasts must be positive");
        }
        for (const PointForecast& existing : points) {
            if (existing.year == year) {
                throw data_error(path + ":" + std::to_string(line_no) +
                                 ": duplicate year " + std::to_string(year));
            }
        }
        points.push_back({static_cast<int>(year), value});
    }
    if (!header_seen) throw data_error(path + ": file is empty");
    return points;
}

}  // namespace popbands
