#pragma once

#include <stdexcept>
#include <string>

namespace popbands {

/// Base class for all toolkit errors. Messages are prefixed with the
/// component that raised them ("csv: ...", "arima: ...").
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent run configuration (bad keys, bad values,
/// target years not after the origin).
class config_error : public error {
public:
    using error::error;
};

/// Malformed or inconsistent input data: CSV parse failures, year gaps,
/// duplicate years, point/band misalignment.
class data_error : public error {
public:
    using error::error;
};

/// Too few observations for the requested operation.
class insufficient_data_error : public data_error {
public:
    using data_error::data_error;
};

/// Numerical failure: degenerate inputs, singular systems, failed search.
class numeric_error : public error {
public:
    using error::error;
};

/// Series with zero variance where variation is required.
class degenerate_series_error : public numeric_error {
public:
    using numeric_error::numeric_error;
};

/// Filesystem-level failure while reading inputs or writing outputs.
class io_error : public error {
public:
    using error::error;
};

}  // namespace popbands
