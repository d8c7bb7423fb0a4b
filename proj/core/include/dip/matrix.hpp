#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "dip/errors.hpp"

namespace dip {

/// Dense row-major matrix of 64-bit reals. The universal carrier for
/// prompts, factors and features. Immutable size; entries are plain
/// doubles with no NaN/Inf allowed at API boundaries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Matrix& other) const = default;

  /// True iff every entry is finite.
  bool all_finite() const;

  double frobenius_norm() const;
  double max_abs() const;

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  /// One row as a rows()==1 matrix.
  Matrix row(std::size_t r) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// Standard matrix product; throws ShapeError when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Entrywise product; shapes must match.
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Throws DomainError naming `where` if m contains NaN or Inf.
void ensure_finite(const Matrix& m, const std::string& where);

/// Throws ShapeError naming `where` unless the shapes agree.
void ensure_same_shape(const Matrix& a, const Matrix& b,
                       const std::string& where);

std::string shape_string(const Matrix& m);

}  // namespace dip
