#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairad/errors.hpp"

namespace fairad {

/// Dense row-major matrix of 64-bit floats. The workhorse container for
/// batches, parameters and representation blocks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const;
  /// Throws NumericError mentioning `context` if any entry is non-finite.
  void ensure_finite(const std::string& context) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double c);
  Matrix operator-(const Matrix& other) const;
  Matrix operator+(const Matrix& other) const;

  /// Frobenius inner product <A, B>.
  double dot(const Matrix& other) const;

  /// Sum of squares of all entries.
  double squared_norm() const;

  Matrix transposed() const;

  /// Selects rows by index, preserving the given order.
  Matrix gather_rows(const std::vector<std::size_t>& idx) const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C = alpha * op(A) * op(B) + beta * C, with op = transpose when requested.
/// Fixed reduction order per (shape, build), so results are reproducible.
void gemm(bool trans_a, bool trans_b, double alpha, const Matrix& a, const Matrix& b,
          double beta, Matrix& c);

/// A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

}  // namespace fairad
