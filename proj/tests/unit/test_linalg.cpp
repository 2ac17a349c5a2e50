// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "../common/random_matrices.hpp"
#include "sage/errors.hpp"
#include "sage/linalg.hpp"

namespace sage {
namespace {

double orthogonality_error(const Matrix& q) {
  const Matrix qtq = transpose_times(q, q);
  return frobenius_norm(qtq - Matrix::identity(qtq.rows()));
}

Matrix rotation(double angle) {
  return Matrix::from_rows({{std::cos(angle), -std::sin(angle)}, {std::sin(angle), std::cos(angle)}});
}

TEST(Matrix, RejectsNonFiniteAndBadSize) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeMismatch);
  EXPECT_THROW(Matrix(1, 2, std::vector<double>{1, std::numeric_limits<double>::quiet_NaN()}), NonFiniteLoss);
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{std::numeric_limits<double>::infinity()}), NonFiniteLoss);
}

TEST(Matrix, ProductsAndTranspose) {
  const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix b = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  EXPECT_EQ(a * b, Matrix::from_rows({{4, 5}, {10, 11}}));
  EXPECT_EQ(transpose_times(a, a), a.transposed() * a);
  const std::vector<double> x{1, 1, 1};
  EXPECT_EQ(a * std::span<const double>(x), (std::vector<double>{6, 15}));
}

TEST(FrobeniusNorm, Examples) {
  EXPECT_NEAR(frobenius_norm(Matrix::identity(2)), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(frobenius_norm(Matrix(3, 2)), 0.0);
  EXPECT_EQ(frobenius_norm(Matrix::from_rows({{3, 4}})), 5.0);
}

TEST(PairwiseSum, MatchesNaiveOnIntegers) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_EQ(pairwise_sum(v), 999.0 * 1000.0 / 2.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(SymPD, RejectsAsymmetricAndIndefinite) {
  EXPECT_THROW(SymPD(Matrix::from_rows({{1, 0.5}, {0.4, 1}})), NotPositiveDefinite);
  EXPECT_THROW(SymPD(Matrix::from_rows({{1, 2}, {2, 1}})), NotPositiveDefinite);
  EXPECT_THROW(SymPD(Matrix::from_rows({{0, 0}, {0, 1}})), NotPositiveDefinite);
  EXPECT_NO_THROW(SymPD(Matrix::from_rows({{2, 1}, {1, 2}})));
}

TEST(PdSolve, IdentityReturnsRightHandSide) {
  const Matrix b = Matrix::from_rows({{1.5, -2}, {3, 0.25}});
  EXPECT_EQ(pd_solve(SymPD(Matrix::identity(2)), b), b);
}

TEST(PdSolve, TwoDomainTraceRatio) {
  // 3.24 / 4.01 computed independently.
  const Matrix x = pd_solve(SymPD(Matrix::from_rows({{10, 0}, {0, 4.01}})), Matrix::from_rows({{0, 0}, {0, 3.24}}));
  EXPECT_NEAR(x(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(x(1, 1), 0.8079800498753118, 1e-15);
  EXPECT_NEAR(trace(x), 0.80798, 1e-6);
}

TEST(PdSolve, SelfSolveGivesIdentityAndRoundTrips) {
  std::mt19937_64 eng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const Matrix m = testing::random_normal_matrix(n, n, eng);
    const Matrix h = transpose_times(m, m) + Matrix::identity(n);
    const SymPD pd(h);
    EXPECT_LE(frobenius_norm(pd_solve(pd, h) - Matrix::identity(n)), 1e-10);
    const Matrix b = testing::random_normal_matrix(n, 3, eng);
    EXPECT_LE(frobenius_norm(h * pd_solve(pd, b) - b), 1e-10 * frobenius_norm(b));
  }
}

TEST(PsdFactor, ToleratesZeroPivotsAndRejectsNegative) {
  const Matrix l = psd_factor(Matrix::from_rows({{0, 0}, {0, 1}}));
  EXPECT_EQ(l * l.transposed(), Matrix::from_rows({{0, 0}, {0, 1}}));
  EXPECT_THROW(psd_factor(Matrix::from_rows({{1, 0}, {0, -1}})), NotPositiveDefinite);
}

TEST(JacobiSvd, ReconstructsAndSortsSingularValues) {
  std::mt19937_64 eng(11);
  for (auto [r, c] : {std::pair{5, 3}, std::pair{3, 5}, std::pair{4, 4}, std::pair{1, 6}}) {
    const Matrix g = testing::random_normal_matrix(r, c, eng);
    const Svd svd = jacobi_svd(g);
    Matrix rec(r, c);
    for (std::size_t p = 0; p < svd.s.size(); ++p)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) rec(i, j) += svd.s[p] * svd.u(i, p) * svd.v(j, p);
    EXPECT_LE(frobenius_norm(rec - g), 1e-12 * frobenius_norm(g));
    EXPECT_TRUE(std::is_sorted(svd.s.rbegin(), svd.s.rend()));
    EXPECT_LE(svd.sweeps, 100);
  }
}

TEST(SvdPolarOracle, OrthogonalInputIsFixed) {
  const Matrix r = rotation(std::numbers::pi / 6);
  EXPECT_LE(frobenius_norm(svd_polar_oracle(r) - r), 1e-14);
}

TEST(SvdPolarOracle, RankOneGivesOuterProduct) {
  const double s = 1.0 / std::sqrt(2.0);
  const Matrix u = Matrix::column(std::vector<double>{0.6, 0.8, 0.0});
  const Matrix v = Matrix::column(std::vector<double>{s, -s});
  const Matrix uvt = u * v.transposed();
  EXPECT_LE(frobenius_norm(svd_polar_oracle(uvt * 3.0) - uvt), 1e-14);
}

TEST(SvdPolarOracle, RandomTallHasOrthonormalColumns) {
  std::mt19937_64 eng(3);
  const Matrix q = svd_polar_oracle(testing::random_normal_matrix(3, 2, eng));
  EXPECT_LE(orthogonality_error(q), 1e-10);
}

TEST(SvdPolarOracle, MatchesIndependentReference) {
  // numpy.linalg.svd of the same matrix.
  const Matrix g = Matrix::from_rows({{1, 2}, {0.5, -1}, {2, 0.3}});
  const Matrix expected = Matrix::from_rows({{0.2671626726930904, 0.8493840344462247},
                                             {0.3334675136958176, -0.5246351058977485},
                                             {0.9041147734823349, -0.0574871088811433}});
  EXPECT_LE(max_abs_diff(svd_polar_oracle(g), expected), 1e-14);
}

TEST(SvdPolarOracle, ZeroThrows) { EXPECT_THROW(svd_polar_oracle(Matrix(2, 2)), ZeroGradient); }

TEST(NewtonSchulz, OrthogonalIsFixedPoint) {
  const Matrix r = rotation(std::numbers::pi / 6);
  EXPECT_LE(max_abs_diff(newton_schulz_polar(r, 5), r), 1e-12);
}

TEST(NewtonSchulz, ScaledIdentityFollowsScalarRecursion) {
  // x <- x (3 - x^2) / 2 from 1/sqrt(2), evaluated independently.
  const double expected[] = {0.8838834764831843, 0.9805582317235326, 0.9994367007920929, 0.9999995241303726,
                             0.9999999999996602};
  for (int t = 1; t <= 5; ++t) {
    const Matrix x = newton_schulz_polar(Matrix::identity(2) * 3.0, t);
    EXPECT_NEAR(x(0, 0), expected[t - 1], 1e-15) << "T=" << t;
    EXPECT_NEAR(x(1, 1), expected[t - 1], 1e-15);
    EXPECT_EQ(x(0, 1), 0.0);
  }
}

TEST(NewtonSchulz, DiagonalTwoHalfAtFiveSteps) {
  // The small direction starts at 0.5 / sqrt(4.25) and is still 2% short of
  // its polar value after five steps; the large one has converged.
  const Matrix x = newton_schulz_polar(Matrix::from_rows({{2, 0}, {0, 0.5}}), 5);
  EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(x(1, 1), 0.9790773607762071, 1e-14);
  EXPECT_GT(std::abs(x(1, 1) - 1.0), 1e-6);
  const Matrix x12 = newton_schulz_polar(Matrix::from_rows({{2, 0}, {0, 0.5}}), 12);
  EXPECT_LE(max_abs_diff(x12, Matrix::identity(2)), 1e-12);
}

TEST(NewtonSchulz, TallMatrixMatchesIndependentReference) {
  // numpy iteration of the same recursion for T = 5.
  const Matrix g = Matrix::from_rows({{1, 2}, {0.5, -1}, {2, 0.3}});
  const Matrix expected = Matrix::from_rows({{0.26716270225339844, 0.8493840037383681},
                                             {0.3334674714850978, -0.5246350620483834},
                                             {0.9041147271698343, -0.05748706077076352}});
  const Matrix x = newton_schulz_polar(g, 5);
  EXPECT_EQ(x.rows(), 3u);
  EXPECT_EQ(x.cols(), 2u);
  EXPECT_LE(max_abs_diff(x, expected), 1e-14);
}

TEST(NewtonSchulz, WideMatrixIsTransposeOfTall) {
  std::mt19937_64 eng(5);
  const Matrix g = testing::random_normal_matrix(3, 7, eng);
  const Matrix wide = newton_schulz_polar(g, 8);
  const Matrix tall = newton_schulz_polar(g.transposed(), 8);
  EXPECT_LE(max_abs_diff(wide, tall.transposed()), 1e-14);
}

TEST(NewtonSchulz, ConvergesToOracleWithEnoughIterations) {
  // Condition number <= 100 and shapes up to 16x16 need about 20 steps.
  std::mt19937_64 eng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + trial % 16;
    const std::size_t c = 1 + (trial * 7) % 16;
    const Matrix g = testing::random_conditioned(r, c, 1.0 + 99.0 * (trial % 10) / 9.0, eng);
    EXPECT_LE(frobenius_norm(newton_schulz_polar(g, 30) - svd_polar_oracle(g)), 1e-10) << r << "x" << c;
  }
}

TEST(NewtonSchulz, FiveStepsLeaveSmallDirectionsUnconverged) {
  // A 16x16 orthogonal G normalises to singular values 1/4 everywhere.
  std::mt19937_64 eng(2);
  const Matrix q = testing::random_orthonormal(16, 16, eng);
  const Matrix x = newton_schulz_polar(q, 5);
  double s = 0.25;
  for (int t = 0; t < 5; ++t) s = 0.5 * s * (3.0 - s * s);
  EXPECT_LE(max_abs_diff(x, q * s), 1e-13);
  EXPECT_GT(frobenius_norm(x - q), 1e-2);
}

TEST(NewtonSchulz, ScaleInvariance) {
  std::mt19937_64 eng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix g = testing::random_normal_matrix(1 + trial % 6, 1 + trial % 4, eng);
    const Matrix base = newton_schulz_polar(g, 5);
    for (double c : {1e-3, 0.37, 1.0, 1e3}) EXPECT_LE(max_abs_diff(newton_schulz_polar(g * c, 5), base), 1e-12);
    // Powers of two scale exactly.
    EXPECT_EQ(newton_schulz_polar(g * 1024.0, 5), base);
  }
}

TEST(NewtonSchulz, RankDeficientKeepsZeroDirections) {
  const Matrix g = Matrix::from_rows({{1, 0, 0}, {0, 0, 0}});
  const Matrix x = newton_schulz_polar(g, 5);
  EXPECT_NEAR(x(0, 0), 1.0, 1e-12);
  EXPECT_EQ(x(1, 1), 0.0);
  EXPECT_EQ(x(1, 2), 0.0);
}

TEST(NewtonSchulz, Errors) {
  EXPECT_THROW(newton_schulz_polar(Matrix(2, 3), 5), ZeroGradient);
  EXPECT_THROW(newton_schulz_polar(Matrix::identity(2), 0), InvalidArgument);
}

}  // namespace
}  // namespace sage
