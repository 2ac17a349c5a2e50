// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "sage/errors.hpp"

namespace sage {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeMismatch("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                        std::to_string(rows_ * cols_));
  }
  if (!all_finite(data_)) throw NonFiniteLoss("matrix entries must be finite");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeMismatch("ragged rows in Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matrix product inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix transpose_times(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeMismatch("transpose_times row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  }
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ShapeMismatch("matrix-vector product");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

double frobenius_norm(const Matrix& m) { return l2_norm(m.data()); }

double trace(const Matrix& m) {
  if (!m.is_square()) throw ShapeMismatch("trace of a non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (!m.is_square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * std::max(1.0, std::abs(m(i, j)))) return false;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("dot product of unequal lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) return std::accumulate(v.begin(), v.end(), 0.0);
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

SymPD::SymPD(Matrix m) : m_(std::move(m)) {
  if (!m_.is_square() || m_.empty()) throw NotPositiveDefinite("matrix must be square and nonempty");
  if (!is_symmetric(m_)) throw NotPositiveDefinite("matrix is not symmetric");
  const std::size_t n = m_.rows();
  l_ = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m_(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l_(j, k) * l_(j, k);
    if (!(pivot > 0.0)) {
      throw NotPositiveDefinite("non-positive pivot " + std::to_string(pivot) + " at column " +
                                std::to_string(j));
    }
    const double d = std::sqrt(pivot);
    l_(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m_(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / d;
    }
  }
}

Matrix pd_solve(const SymPD& h, const Matrix& b) {
  const Matrix& l = h.cholesky_factor();
  const std::size_t n = h.dim();
  if (b.rows() != n) throw ShapeMismatch("pd_solve right-hand side has wrong row count");
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    // forward: L y = b
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    // backward: L^T x = y
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

std::vector<double> pd_solve(const SymPD& h, std::span<const double> b) {
  const Matrix x = pd_solve(h, Matrix::column(b));
  return x.values();
}

Matrix psd_factor(const Matrix& m, double tol) {
  if (!m.is_square()) throw NotPositiveDefinite("psd_factor needs a square matrix");
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < -tol) {
      throw NotPositiveDefinite("negative pivot " + std::to_string(pivot) + " at column " +
                                std::to_string(j));
    }
    if (pivot <= tol) continue;  // column stays zero
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / d;
    }
  }
  return l;
}

Svd jacobi_svd(const Matrix& g) {
  if (g.empty()) throw ShapeMismatch("SVD of an empty matrix");
  // Orthogonalise columns of a tall matrix; wide input is handled through G^T.
  const bool wide = g.cols() > g.rows();
  Matrix a = wide ? g.transposed() : g;
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix v = Matrix::identity(n);

  constexpr double kOffTol = 1e-14;
  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        off += gamma * gamma;
        diag += alpha * beta;
        if (gamma == 0.0 || std::abs(gamma) <= kOffTol * std::sqrt(alpha * beta)) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    // Relative off-diagonal mass of A^T A.
    if (off <= kOffTol * kOffTol * std::max(diag, 1e-300)) {
      ++sweep;
      break;
    }
  }

  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += a(i, j) * a(i, j);
    s[j] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  Svd out;
  out.sweeps = sweep;
  out.s.resize(n);
  Matrix u(m, n), vs(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = s[j];
    for (std::size_t i = 0; i < m; ++i) u(i, k) = s[j] > 0.0 ? a(i, j) / s[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) vs(i, k) = v(i, j);
  }
  if (wide) {
    out.u = std::move(vs);
    out.v = std::move(u);
  } else {
    out.u = std::move(u);
    out.v = std::move(vs);
  }
  return out;
}

Matrix svd_polar_oracle(const Matrix& g) {
  if (g.empty() || frobenius_norm(g) == 0.0) throw ZeroGradient("polar factor of a zero matrix");
  const Svd svd = jacobi_svd(g);
  const double cutoff = 1e-13 * svd.s.front();
  Matrix q(g.rows(), g.cols());
  for (std::size_t k = 0; k < svd.s.size(); ++k) {
    if (svd.s[k] <= cutoff) continue;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) q(i, j) += svd.u(i, k) * svd.v(j, k);
  }
  return q;
}

Matrix newton_schulz_polar(const Matrix& g, int iterations) {
  if (iterations < 1) throw InvalidArgument("Newton-Schulz needs at least one iteration");
  const double norm = g.empty() ? 0.0 : frobenius_norm(g);
  if (norm == 0.0) throw ZeroGradient("Newton-Schulz on a zero matrix");
  Matrix x = g * (1.0 / norm);
  // Work on the Gram matrix of the smaller side: for wide X use
  // X (3I - X^T X) = (3I - X X^T) X, which is the same polynomial in X.
  const bool wide = x.cols() > x.rows();
  for (int k = 0; k < iterations; ++k) {
    if (wide) {
      Matrix gram = x * x.transposed();
      Matrix left = gram * -0.5;
      for (std::size_t i = 0; i < left.rows(); ++i) left(i, i) += 1.5;
      x = left * x;
    } else {
      Matrix right = transpose_times(x, x) * -0.5;
      for (std::size_t i = 0; i < right.rows(); ++i) right(i, i) += 1.5;
      x = x * right;
    }
  }
  return x;
}

}  // namespace sage
