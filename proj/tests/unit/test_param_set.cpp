// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sage/errors.hpp"
#include "sage/finite_diff.hpp"
#include "sage/param_set.hpp"

namespace sage {
namespace {

ParamSet two_tensors() {
  ParamSet p;
  p.add_matrix("w", Matrix::from_rows({{1, 2, 3}, {4, 5, 6}}));
  p.add_vector("b", {7, 8});
  return p;
}

TEST(ParamSet, FlattenOrderAndRoundTrip) {
  const ParamSet p = two_tensors();
  EXPECT_EQ(p.dimension(), 8u);
  EXPECT_EQ(p.flatten(), (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(p.unflatten(p.flatten()), p);
  EXPECT_EQ(p[0].kind(), TensorKind::matrix);
  EXPECT_EQ(p[1].kind(), TensorKind::vector);
}

TEST(ParamSet, RejectsDuplicatesAndBadSizes) {
  ParamSet p = two_tensors();
  EXPECT_THROW(p.add_vector("b", {1}), InvalidArgument);
  EXPECT_THROW(p.add("c", {2, 2}, {1, 2, 3}), InvalidArgument);
  EXPECT_THROW(p.add("d", {}, {}), InvalidArgument);
  EXPECT_THROW(p.unflatten(std::vector<double>(3)), ShapeMismatch);
  EXPECT_THROW(p.at("missing"), InvalidArgument);
}

TEST(ParamSet, ArithmeticAndNorms) {
  ParamSet p = two_tensors();
  const ParamSet q = p;
  p.axpy(-1.0, q);
  EXPECT_EQ(p.l2_norm(), 0.0);
  EXPECT_EQ(dot(q, q), 204.0);
  ParamSet z = q.zeros_like();
  EXPECT_TRUE(z.same_layout(q));
  z.assign(q.flatten());
  EXPECT_EQ(z, q);
  ParamSet bad = q;
  bad[1].values[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(bad.all_finite());
}

TEST(ParamSet, HigherOrderTensorCollapsesLeadingDims) {
  ParamSet p;
  std::vector<double> v(24);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  p.add("t", {2, 3, 4}, v);
  EXPECT_EQ(p[0].kind(), TensorKind::matrix);
  EXPECT_EQ(p[0].matrix_rows(), 6u);
  EXPECT_EQ(p[0].matrix_cols(), 4u);
  const Matrix m = p[0].as_matrix();
  EXPECT_EQ(m(5, 3), 23.0);
  EXPECT_EQ(m(1, 0), 4.0);
}

TEST(FiniteDiff, QuadraticGradient) {
  // f = 1/2 th^T diag(2, 1) th + (1, -1).th at 0 has gradient (1, -1).
  const ScalarFn f = [](const ParamSet& p) {
    const auto& t = p[0].values;
    return 0.5 * (2 * t[0] * t[0] + t[1] * t[1]) + t[0] - t[1];
  };
  const auto g = finite_diff_gradient(f, make_theta({0.0, 0.0})).flatten();
  EXPECT_NEAR(g[0], 1.0, 1e-8);
  EXPECT_NEAR(g[1], -1.0, 1e-8);
  const Matrix h = finite_diff_hessian(f, make_theta({0.3, -0.2}));
  EXPECT_LE(max_abs_diff(h, Matrix::from_rows({{2, 0}, {0, 1}})), 1e-6);
  EXPECT_TRUE(is_symmetric(h));
}

TEST(FiniteDiff, ConstantHasZeroGradient) {
  const ScalarFn f = [](const ParamSet&) { return 4.0; };
  EXPECT_EQ(finite_diff_gradient(f, make_theta({1.0, 2.0, 3.0})).l2_norm(), 0.0);
}

TEST(FiniteDiff, Errors) {
  const ScalarFn nan = [](const ParamSet& p) {
    return p[0].values[0] > 0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  EXPECT_THROW(finite_diff_gradient(nan, make_theta({0.0})), NonFiniteLoss);
  EXPECT_THROW(finite_diff_hessian(nan, make_theta({0.0})), NonFiniteLoss);
  const ScalarFn f = [](const ParamSet&) { return 0.0; };
  EXPECT_THROW(finite_diff_hessian(f, make_theta(std::vector<double>(kMaxHessianDim + 1))), DimensionTooLarge);
  EXPECT_THROW(finite_diff_gradient(f, make_theta({0.0}), 0.0), InvalidArgument);
}

}  // namespace
}  // namespace sage
