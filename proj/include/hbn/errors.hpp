#pragma once

#include <stdexcept>
#include <string>

namespace hbn {

// Base of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain (r >= 1, lambda <= lambda0, zero field).
struct DomainError : Error {
  using Error::Error;
};

// Bad configuration value or grid request.
struct ConfigError : Error {
  using Error::Error;
};

// Fields on different grids or modes combined.
struct StructuralError : Error {
  using Error::Error;
};

// Linear solver, eigensolver or optimizer failure.
struct NumericalError : Error {
  using Error::Error;
};

// Operation precondition violated (e.g. retraction of a field with Q <= 0).
struct PreconditionError : Error {
  using Error::Error;
};

// Spectrum too short to answer a query.
struct RangeError : Error {
  using Error::Error;
};

// Concentration scale below what the grid can represent.
struct ResolutionError : Error {
  using Error::Error;
};

// Search exhausted its restarts.
struct SearchError : Error {
  using Error::Error;
};

}  // namespace hbn
