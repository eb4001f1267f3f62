#pragma once

#include <stdexcept>
#include <string>

namespace pft {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclass onto its exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or parameters (exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data cannot be used: unreadable files, bad cells, series too short (exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during training or adaptation (exit code 3).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace pft
