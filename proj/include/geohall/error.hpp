#pragma once

#include <stdexcept>
#include <string>

namespace geohall {

// Error taxonomy. The CLI maps each family to an exit code:
// UsageError -> 1, DataError (and subclasses) -> 2, NumericalError -> 3.

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bundled or user-supplied configuration (e.g. the history table) is unusable.
class ConfigError : public DataError {
public:
    using DataError::DataError;
};

// Corpus rendering could not satisfy a sampling constraint.
class GenerationError : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

// Tensor file header is malformed: bad magic, unknown dtype, truncated payload.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// Tensor file is well formed but disagrees with its manifest entry.
class ConsistencyError : public DataError {
public:
    using DataError::DataError;
};

// Payload contains NaN or Inf, or violates a value-range invariant.
class ValueError : public DataError {
public:
    using DataError::DataError;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateVarianceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace geohall
