#pragma once

#include <stdexcept>
#include <string>

namespace fairad {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix/vector dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value that must be finite is NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A vector with zero norm was passed where a direction is required.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// A group (or batch) has too few rows for the requested operation.
class InsufficientGroupError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given labels (e.g. no positives).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// A required column or field is missing from structured input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A cell could not be parsed; message carries row/column context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Data is structurally unusable (empty group, all-constant features, ...).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// A resampling request exceeds what the dataset can provide.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// An enum/name lookup failed or a required collection is empty.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An experiment configuration is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairad
