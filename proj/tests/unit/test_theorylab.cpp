// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "sage/errors.hpp"
#include "sage/stats.hpp"
#include "sage/theorylab.hpp"

namespace sage {
namespace {

const SymPD kHbar{Matrix::from_rows({{10, 0}, {0, 4.01}})};

QuadraticFamily flat_family(double m) { return build_counterexample(m, CounterexampleVariant::flat_misaligned).family; }

McOptions mc(std::size_t k, double sigma, std::size_t trials) {
  McOptions o;
  o.k = k;
  o.sigma = sigma;
  o.trials = trials;
  o.threads = 1;
  return o;
}

TEST(ClosedFormTerms, Examples) {
  EXPECT_NEAR(alignment_term(kHbar, Matrix::from_rows({{0, 0}, {0, 3.24}}), 1), 0.4039900249376559, 1e-15);
  EXPECT_EQ(alignment_term(kHbar, Matrix(2, 2), 4), 0.0);
  EXPECT_DOUBLE_EQ(alignment_term(SymPD(Matrix::identity(3)), Matrix::identity(3), 3), 0.5);
  EXPECT_EQ(curvature_term(kHbar, 0.0), 0.0);
  EXPECT_NEAR(curvature_term(kHbar, 0.1), 0.07005, 1e-15);
  EXPECT_NEAR(curvature_term(SymPD(Matrix::identity(2) * 0.05), 1.0), 0.05, 1e-15);
  EXPECT_THROW(curvature_term(kHbar, -1.0), InvalidArgument);
  EXPECT_THROW(alignment_term(kHbar, Matrix(2, 2), 0), InvalidArgument);
}

TEST(McExcessRisk, SingleEnvironmentNoNoiseIsExact) {
  // tr(A^-1 Sigma) = 2M = 20, halved: every trial has excess 10.
  const DecompositionReport r = mc_excess_risk(flat_family(10), mc(1, 0.0, 10000), Rng(1));
  EXPECT_NEAR(r.closed_form(), 10.0, 1e-12);
  EXPECT_NEAR(r.mc_excess_mean, 10.0, 1e-12);
  EXPECT_TRUE(r.within_three_se());
  EXPECT_EQ(r.trials, 10000u);
}

TEST(McExcessRisk, ZeroCovarianceGivesZeroExcess) {
  const QuadraticFamily fam(Matrix::identity(2), {{0, 0}, {0, 0}});
  const DecompositionReport r = mc_excess_risk(fam, mc(3, 0.0, 500), Rng(2));
  EXPECT_EQ(r.mc_excess_mean, 0.0);
  EXPECT_EQ(r.mc_excess_se, 0.0);
}

TEST(McExcessRisk, WithinThreeStandardErrors) {
  for (std::size_t k : {2u, 5u}) {
    for (double sigma : {0.1, 0.3}) {
      const DecompositionReport r = mc_excess_risk(flat_family(10), mc(k, sigma, 20000), Rng(3));
      EXPECT_GT(r.mc_excess_se, 0.0);
      EXPECT_TRUE(r.within_three_se()) << "K=" << k << " sigma=" << sigma << " mean=" << r.mc_excess_mean
                                       << " closed=" << r.closed_form() << " se=" << r.mc_excess_se;
      EXPECT_NEAR(r.alignment_term, 20.0 / (2.0 * static_cast<double>(k)), 1e-12);
      EXPECT_NEAR(r.curvature_term, sigma * sigma * 0.1 / 2.0, 1e-15);
    }
  }
}

TEST(McExcessRisk, OneOverKScaling) {
  const auto r1 = mc_excess_risk(flat_family(10), mc(1, 0.0, 20000), Rng(4));
  const auto r10 = mc_excess_risk(flat_family(10), mc(10, 0.0, 20000), Rng(4));
  const double ratio = r1.mc_excess_mean / r10.mc_excess_mean;
  const double ratio_se = ratio * r10.mc_excess_se / r10.mc_excess_mean;
  EXPECT_NEAR(ratio, 10.0, 4.0 * ratio_se);
}

TEST(McExcessRisk, ThreadCountDoesNotChangeResult) {
  McOptions a = mc(5, 0.3, 3000);
  McOptions b = a;
  b.threads = 4;
  const auto ra = mc_excess_risk(flat_family(10), a, Rng(5));
  const auto rb = mc_excess_risk(flat_family(10), b, Rng(5));
  EXPECT_EQ(ra.mc_excess_mean, rb.mc_excess_mean);
  EXPECT_EQ(ra.mc_excess_se, rb.mc_excess_se);
}

TEST(McExcessRisk, SgdSolverAndGaussianMeta) {
  McOptions sgd = mc(2, 0.1, 2000);
  sgd.solver = ThetaSolver::sgd;
  const auto rs = mc_excess_risk(flat_family(10), sgd, Rng(6));
  const auto rc = mc_excess_risk(flat_family(10), mc(2, 0.1, 2000), Rng(6));
  EXPECT_NEAR(rs.mc_excess_mean, rc.mc_excess_mean, 1e-6 * rc.mc_excess_mean);

  McOptions gauss = mc(2, 0.1, 20000);
  gauss.meta = MetaDistribution::gaussian;
  EXPECT_TRUE(mc_excess_risk(flat_family(10), gauss, Rng(7)).within_three_se());
}

TEST(McExcessRisk, Validation) {
  EXPECT_THROW(mc_excess_risk(flat_family(10), mc(1, 0.0, 99), Rng(1)), InvalidArgument);
  EXPECT_THROW(mc_excess_risk(flat_family(10), mc(0, 0.0, 100), Rng(1)), InvalidArgument);
  EXPECT_THROW(mc_excess_risk(flat_family(10), mc(1, -0.1, 100), Rng(1)), InvalidArgument);
  EXPECT_EQ(meta_distribution_from_string("gaussian"), MetaDistribution::gaussian);
  EXPECT_EQ(theta_solver_from_string("sgd"), ThetaSolver::sgd);
  EXPECT_THROW(theta_solver_from_string("lbfgs"), InvalidArgument);
}

TEST(Counterexample, TracesAtSeveralScales) {
  double prev_tr_h = 1e300, prev_ratio = 0.0;
  for (double m : {2.0, 10.0, 100.0}) {
    const auto i = build_counterexample(m, CounterexampleVariant::flat_misaligned);
    EXPECT_NEAR(i.tr_h, 1.0 / m, 1e-10 / m);
    EXPECT_NEAR(i.tr_hinv_sigma, 2.0 * m, 1e-10 * 2.0 * m);
    EXPECT_NEAR(i.tr_h * i.tr_hinv_sigma, 2.0, 1e-12);
    EXPECT_TRUE(i.satisfies_bounds());
    EXPECT_LT(i.tr_h, prev_tr_h);
    EXPECT_GT(i.tr_hinv_sigma, prev_ratio);
    prev_tr_h = i.tr_h;
    prev_ratio = i.tr_hinv_sigma;

    const auto ii = build_counterexample(m, CounterexampleVariant::aligned_sharp);
    EXPECT_NEAR(ii.tr_h, m, 1e-10 * m);
    EXPECT_NEAR(ii.tr_hinv_sigma, 1.0 / m, 1e-10 / m);
    EXPECT_TRUE(ii.satisfies_bounds());
  }
}

TEST(Counterexample, Rejections) {
  EXPECT_THROW(build_counterexample(1.0, CounterexampleVariant::flat_misaligned), InvalidArgument);
  EXPECT_THROW(build_counterexample(-3.0, CounterexampleVariant::aligned_sharp), InvalidArgument);
  EXPECT_EQ(counterexample_variant_from_string("ii"), CounterexampleVariant::aligned_sharp);
  EXPECT_EQ(counterexample_variant_from_string("flat_misaligned"), CounterexampleVariant::flat_misaligned);
  EXPECT_THROW(counterexample_variant_from_string("iii"), InvalidArgument);
}

TEST(Decoupling, HoldsOnBothVariants) {
  for (auto v : {CounterexampleVariant::flat_misaligned, CounterexampleVariant::aligned_sharp}) {
    const DecouplingReport r = decoupling_check(build_counterexample(10, v).family, Rng(8));
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.replacements, 5u);
    EXPECT_EQ(r.max_h_deviation, 0.0);
    EXPECT_EQ(r.max_sigma_deviation, 0.0);
  }
}

TEST(Motivating, ReferenceValues) {
  const MotivatingReport r = motivating_example_report();
  EXPECT_LE(max_abs_diff(r.h_bar, Matrix::from_rows({{10, 0}, {0, 4.01}})), 1e-12);
  EXPECT_NEAR(r.theta_star[0], 0.1, 1e-10);
  EXPECT_NEAR(r.theta_star[1], 0.0, 1e-10);
  EXPECT_NEAR(r.grads_at_origin[0][0], -1.0, 1e-12);
  EXPECT_NEAR(r.grads_at_origin[0][1], -2.0, 1e-12);
  EXPECT_NEAR(r.grads_at_origin[1][0], -1.0, 1e-12);
  EXPECT_NEAR(r.grads_at_origin[1][1], 2.0, 1e-12);
  EXPECT_LE(max_abs_diff(r.sigma_g_star, Matrix::from_rows({{0, 0}, {0, 3.24}})), 1e-10);
  EXPECT_NEAR(r.tr_hinv_sigma, 0.8079800498753118, 1e-12);
  EXPECT_NEAR(r.tr_hinv_sigma, 0.80798, 1e-5);
  EXPECT_NEAR(r.domain_optima[0][0], 0.0003, 5e-4);
  EXPECT_NEAR(r.domain_optima[0][1], 0.499, 5e-4);
  EXPECT_NEAR(r.domain_optima[1][1], -0.499, 5e-4);
  EXPECT_NEAR(r.loss_increase, 0.05, 1e-10);
  EXPECT_NEAR(r.loss_increase_quadratic, 0.05, 1e-12);
  EXPECT_NEAR(r.agreement_at_origin, -0.6, 1e-15);
}

TEST(Remainder, ExactExpectationsAndDecay) {
  const RemainderReport r = remainder_spot_check();
  ASSERT_EQ(r.rows.size(), 3u);
  // Reference expectations from an independent Python enumeration.
  EXPECT_NEAR(r.rows[0].expected_excess, 0.12296465652, 1e-8);
  EXPECT_NEAR(r.rows[1].expected_excess, 0.0266765016237, 1e-8);
  EXPECT_TRUE(r.consistent);
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_LT(r.rows[i].remainder, r.rows[i - 1].remainder);
}

}  // namespace
}  // namespace sage
