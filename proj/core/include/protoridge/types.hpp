#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace protoridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Labels = std::vector<std::uint32_t>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem open/read/write failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (NaN entries, label out of range, overlapping classes, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization of G + lambda*I hit a non-positive pivot.
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, long pivot) : Error(what), pivot_(pivot) {}

  /// Zero-based index of the failing pivot.
  long pivot() const noexcept { return pivot_; }

 private:
  long pivot_;
};

/// Training produced a non-finite loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace protoridge
