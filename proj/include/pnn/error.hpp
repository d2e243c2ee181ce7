#pragma once

#include <stdexcept>
#include <string>

namespace pnn {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor dimension or network geometry mismatch.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid configuration value (bad split fraction, zero epochs, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed or empty dataset input.
struct DataError : Error {
    using Error::Error;
};

/// Non-finite value encountered during computation.
struct NumericError : Error {
    using Error::Error;
};

/// Degenerate input to a statistical test.
struct StatError : Error {
    using Error::Error;
};

} // namespace pnn
