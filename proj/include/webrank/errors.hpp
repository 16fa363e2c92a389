#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace webrank {

// Base for every recoverable failure raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read, written or renamed.
struct IoError : Error {
  using Error::Error;
};

// Input data is unusable (bad arguments, empty catalog, ...).
struct InputError : Error {
  using Error::Error;
};

// Not enough data to carry out the request (e.g. fewer sessions than folds).
struct InsufficientDataError : Error {
  using Error::Error;
};

// A query has no tokens left after preprocessing.
struct EmptyQueryError : Error {
  using Error::Error;
};

// A persisted store or model file is corrupt or inconsistent.
struct LoadError : Error {
  using Error::Error;
};

// Precision/recall requested over an empty denominator.
struct MetricError : Error {
  using Error::Error;
};

struct TrainingError : Error {
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what), epoch(epoch) {}
  std::size_t epoch;
};

// Caller broke a documented precondition.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace webrank
