#pragma once

#include <stdexcept>

namespace cccov {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument: shape mismatch, out-of-range option, unknown name.
struct ArgumentError : Error {
  using Error::Error;
};

// Malformed input file (dataset CSV, DAG edge list).
struct SchemaError : Error {
  using Error::Error;
};

// A linear system that had to be invertible was not.
struct SingularityError : Error {
  using Error::Error;
};

// Fewer complete cases than free parameters.
struct UnderIdentifiedError : Error {
  using Error::Error;
};

// Monte Carlo aggregation ended with no usable replications.
struct SummaryError : Error {
  using Error::Error;
};

}  // namespace cccov
