#pragma once

#include <stdexcept>
#include <string>

namespace oed {

/// Base class for every error raised by the library. The CLI maps these to
/// exit status 1 (data/validation failure).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV or manifest).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A count or size precondition failed (m > n, folds > rows, ...).
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Index outside a pool.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Matrix dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Singular or non-finite numerical result.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Objects that must refer to the same pool do not.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// Statistic undefined for the given input (constant vector, zero variance).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Required group or record missing from a collection.
class StructureError : public Error {
 public:
  using Error::Error;
};

}  // namespace oed
