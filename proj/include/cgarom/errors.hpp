#pragma once

#include <stdexcept>
#include <string>

namespace cgarom {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors / records.
struct DimensionError : Error {
    using Error::Error;
};

// Point outside the admissible domain, parameter outside its declared box.
struct DomainError : Error {
    using Error::Error;
};

// File, format, or checksum failure.
struct IoError : Error {
    using Error::Error;
};

// Bad CLI flags or config file contents.
struct UsageError : Error {
    using Error::Error;
};

// Non-finite values, divergence, failed numerical preconditions.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace cgarom
