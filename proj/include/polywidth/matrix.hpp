#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <polywidth/errors.hpp>

namespace polywidth {

using Vec = std::vector<double>;

// Dense row-major matrix, desk scale (dims <= a few hundred).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && a_ == other.a_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec a_;
};

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw shape_error("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                      " vs " + std::to_string(b.rows()) + ")");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vec matvec(const Matrix& a, const Vec& x) {
  if (a.cols() != x.size())
    throw shape_error("matvec: dimension mismatch (" + std::to_string(a.cols()) + " vs " +
                      std::to_string(x.size()) + ")");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Matrix matrix_power(const Matrix& a, unsigned exponent) {
  if (a.rows() != a.cols()) throw shape_error("matrix_power: matrix not square");
  Matrix result = Matrix::identity(a.rows());
  for (unsigned e = 0; e < exponent; ++e) result = matmul(result, a);
  return result;
}

inline double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw shape_error("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

inline Matrix symmetrize(const Matrix& m) {
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

// Cholesky factorization A = L L^T (L lower triangular).
inline Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw shape_error("cholesky: matrix not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0))
      throw decomposition_error(
          "cholesky: matrix not positive definite at pivot " + std::to_string(j), j);
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

// Solve L x = b for lower-triangular L.
inline Vec solve_lower(const Matrix& l, const Vec& b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw shape_error("solve_lower: dimension mismatch");
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

// Solve L^T x = b for lower-triangular L.
inline Vec solve_lower_transpose(const Matrix& l, const Vec& b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw shape_error("solve_lower_transpose: dimension mismatch");
  Vec x(n);
  for (std::size_t ip = n; ip > 0; --ip) {
    const std::size_t i = ip - 1;
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace polywidth
