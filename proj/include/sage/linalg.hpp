// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Dense small-matrix kernel. Row-major storage, double precision, no
// external BLAS: every matrix in this project has at most a few thousand
// entries.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace sage {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Takes ownership of row-major `data`; rejects size mismatch and NaN/Inf.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
// Matrix product.
Matrix operator*(const Matrix& a, const Matrix& b);
// a^T b without materialising the transpose.
Matrix transpose_times(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

double frobenius_norm(const Matrix& m);
double trace(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(std::span<const double> v);
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
// Sum in a fixed pairwise order; reproducible regardless of thread layout.
double pairwise_sum(std::span<const double> v);

// Symmetric positive-definite matrix with its Cholesky factor. Construction
// is the positive-definiteness proof.
class SymPD {
 public:
  // Throws NotPositiveDefinite on asymmetry or a non-positive pivot.
  explicit SymPD(Matrix m);

  const Matrix& matrix() const noexcept { return m_; }
  const Matrix& cholesky_factor() const noexcept { return l_; }
  std::size_t dim() const noexcept { return m_.rows(); }

 private:
  Matrix m_;
  Matrix l_;  // lower triangular, m_ = l_ l_^T
};

// Solves H X = B.
Matrix pd_solve(const SymPD& h, const Matrix& b);
std::vector<double> pd_solve(const SymPD& h, std::span<const double> b);

// Pivot-tolerant Cholesky for positive semi-definite input. Pivots in
// [-tol, tol] are treated as exact zeros; a pivot below -tol throws
// NotPositiveDefinite. Returns L with m ~= L L^T.
Matrix psd_factor(const Matrix& m, double tol = 1e-10);

// Thin SVD G = U diag(s) V^T by one-sided (Hestenes) Jacobi rotations.
// U is rows x k, V is cols x k, k = min(rows, cols); s is non-increasing.
struct Svd {
  Matrix u;
  std::vector<double> s;
  Matrix v;
  int sweeps = 0;
};
Svd jacobi_svd(const Matrix& g);

// Exact polar factor U V^T from the Jacobi SVD. Singular directions with
// sigma <= 1e-13 * sigma_max are dropped, giving a partial isometry for
// rank-deficient input. Throws ZeroGradient if ||G||_F == 0.
Matrix svd_polar_oracle(const Matrix& g);

// Cubic Newton-Schulz iteration towards the polar factor:
//   X_0 = G / ||G||_F,  X_{k+1} = 1/2 X_k (3I - X_k^T X_k).
// Zero singular values stay zero. Convergence of a direction with normalised
// singular value s takes roughly log_{1.5}(1/s) + 4 steps, so `iterations`
// must grow with the condition number and with min(rows, cols).
// Throws ZeroGradient if ||G||_F == 0.
Matrix newton_schulz_polar(const Matrix& g, int iterations = 5);

}  // namespace sage
