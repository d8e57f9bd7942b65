#include "fairad/matrix.hpp"

#include <cmath>
#include <utility>

#ifdef FAIRAD_WITH_BLAS
#include <cblas.h>
#endif

namespace fairad {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Matrix::ensure_finite(const std::string& context) const {
  if (!all_finite()) {
    throw NumericError("non-finite entry in " + context);
  }
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) throw ShapeError("operator+=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!same_shape(other)) throw ShapeError("operator-=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

Matrix Matrix::operator-(const Matrix& other) const {
  Matrix out = *this;
  out -= other;
  return out;
}

Matrix Matrix::operator+(const Matrix& other) const {
  Matrix out = *this;
  out += other;
  return out;
}

double Matrix::dot(const Matrix& other) const {
  if (!same_shape(other)) throw ShapeError("dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

double Matrix::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  }
  return out;
}

Matrix Matrix::gather_rows(const std::vector<std::size_t>& idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows_) throw ShapeError("gather_rows: index out of range");
    const double* src = data_.data() + idx[r] * cols_;
    double* dst = out.data_.data() + r * cols_;
    for (std::size_t j = 0; j < cols_; ++j) dst[j] = src[j];
  }
  return out;
}

namespace {

#ifndef FAIRAD_WITH_BLAS
// Blocked ikj kernel; decent cache behaviour without external deps.
void gemm_naive(bool trans_a, bool trans_b, double alpha, const Matrix& a,
                const Matrix& b, double beta, Matrix& c) {
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  auto at = [&](std::size_t i, std::size_t p) { return trans_a ? a(p, i) : a(i, p); };
  auto bt = [&](std::size_t p, std::size_t j) { return trans_b ? b(j, p) : b(p, j); };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c(i, j) *= beta;
  }
  constexpr std::size_t kBlock = 64;
  for (std::size_t i0 = 0; i0 < m; i0 += kBlock) {
    const std::size_t i1 = std::min(m, i0 + kBlock);
    for (std::size_t p0 = 0; p0 < k; p0 += kBlock) {
      const std::size_t p1 = std::min(k, p0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t p = p0; p < p1; ++p) {
          const double av = alpha * at(i, p);
          for (std::size_t j = 0; j < n; ++j) c(i, j) += av * bt(p, j);
        }
      }
    }
  }
}
#endif

}  // namespace

void gemm(bool trans_a, bool trans_b, double alpha, const Matrix& a, const Matrix& b,
          double beta, Matrix& c) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb) throw ShapeError("gemm: inner dimensions disagree");
  if (c.rows() != m || c.cols() != n) throw ShapeError("gemm: output shape mismatch");
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (double& v : c.data()) v *= beta;
    return;
  }
#ifdef FAIRAD_WITH_BLAS
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a.data().data(),
              static_cast<int>(a.cols()), b.data().data(), static_cast<int>(b.cols()),
              beta, c.data().data(), static_cast<int>(c.cols()));
#else
  gemm_naive(trans_a, trans_b, alpha, a, b, beta, c);
#endif
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  gemm(false, false, 1.0, a, b, 0.0, c);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  gemm(false, true, 1.0, a, b, 0.0, c);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  gemm(true, false, 1.0, a, b, 0.0, c);
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace fairad
