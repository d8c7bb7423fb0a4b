#pragma once

#include <stdexcept>
#include <string>

namespace dip {

/// Base class for every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch between operands (matmul, concat, length checks).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation: non-finite
/// entries, zero-norm vectors, all-zero spectra, constant correlation
/// inputs, nonpositive percentages.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Index or size outside the allowed range (k order, rank, shot count).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Clustered singular values make an analytic gradient ill-defined.
/// Carries the offending relative gap.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, double gap)
      : Error(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_ = 0.0;
};

/// Malformed or rejected run configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure: unreadable input, unwritable output (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Stored content hash does not match the recomputed one (exit code 4).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace dip
