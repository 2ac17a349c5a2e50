// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Numerical checks of the multi-distribution excess-risk decomposition
//   E[R(theta_hat + xi) - R(theta*)] = tr(H^-1 Sigma_g) / (2K) + sigma^2 tr(H) / 2
// on quadratic families (where it is exact), the flat-vs-aligned
// counterexamples, the decoupling of H and Sigma_g, and the two-domain
// Gaussian motivating example.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sage/linalg.hpp"
#include "sage/problems.hpp"
#include "sage/rng.hpp"

namespace sage {

// tr(H^-1 Sigma) / (2K).
double alignment_term(const SymPD& h, const Matrix& sigma, std::size_t k);
// sigma^2 tr(H) / 2.
double curvature_term(const SymPD& h, double sigma);

enum class MetaDistribution { uniform_finite, gaussian };
enum class ThetaSolver { closed_form, sgd };

std::string to_string(MetaDistribution m);
std::string to_string(ThetaSolver s);
MetaDistribution meta_distribution_from_string(const std::string& name);
ThetaSolver theta_solver_from_string(const std::string& name);

inline constexpr std::size_t kMinTrials = 100;

struct McOptions {
  std::size_t k = 1;
  double sigma = 0.0;
  std::size_t trials = 100000;
  MetaDistribution meta = MetaDistribution::uniform_finite;
  ThetaSolver solver = ThetaSolver::closed_form;
  // 0 reads SAGE_OPT_THREADS (default 1).
  unsigned threads = 0;

  void validate() const;
};

struct DecompositionReport {
  std::size_t k = 0;
  double sigma = 0.0;
  double alignment_term = 0.0;
  double curvature_term = 0.0;
  double mc_excess_mean = 0.0;
  double mc_excess_se = 0.0;
  std::size_t trials = 0;

  double closed_form() const { return alignment_term + curvature_term; }
  // |mean - closed| <= 3 SE, plus a rounding floor of 1e-12 max(1, |closed|)
  // for cells where every trial has the same excess and SE is zero.
  bool within_three_se() const;
};

// Each trial draws K offsets from the family (uniformly with replacement, or
// from N(0, Sigma_b) in gaussian mode), fits theta_hat on their mean
// (-A^-1 g_hat, or gradient descent to convergence), adds xi ~ N(0, sigma^2 I)
// and records 1/2 theta^T A theta. Trials use independent streams keyed by
// trial index and are reduced with pairwise summation in index order, so the
// result does not depend on the thread count.
DecompositionReport mc_excess_risk(const QuadraticFamily& family, const McOptions& opts, const Rng& rng);

unsigned threads_from_env();

// ------------------------------------------------------------ counterexample

enum class CounterexampleVariant { flat_misaligned, aligned_sharp };

std::string to_string(CounterexampleVariant v);
CounterexampleVariant counterexample_variant_from_string(const std::string& name);

struct CounterexampleInstance {
  CounterexampleVariant variant;
  double m;
  QuadraticFamily family;
  double tr_h;
  double tr_hinv_sigma;

  // flat_misaligned: tr_h <= 1/M and tr_hinv_sigma >= M;
  // aligned_sharp:   tr_hinv_sigma <= 1/M and tr_h >= M.
  // `rel` absorbs rounding in the equality cases.
  bool satisfies_bounds(double rel = 1e-12) const;
};

// flat_misaligned: A = I / (2M), b = +-(0, 1).
// aligned_sharp:   A = (M / 2) I, b = +-(1/sqrt2, 0).
// Both traces are measured through env_stats at theta = 0 and pd_solve.
// Throws InvalidArgument unless M > 1.
CounterexampleInstance build_counterexample(double m, CounterexampleVariant variant);

// ---------------------------------------------------------------- decoupling

struct DecouplingReport {
  std::size_t replacements = 0;
  bool h_bar_fixed_under_offset_swaps = false;    // H_bar == A bit-for-bit
  bool sigma_fixed_under_curvature_swaps = false;  // Sigma_g(0) bit-for-bit
  bool both_swapped_as_predicted = false;
  double max_h_deviation = 0.0;
  double max_sigma_deviation = 0.0;

  bool passed() const {
    return h_bar_fixed_under_offset_swaps && sigma_fixed_under_curvature_swaps && both_swapped_as_predicted;
  }
};

DecouplingReport decoupling_check(const QuadraticFamily& family, const Rng& rng, std::size_t replacements = 5);

// ---------------------------------------------------------- motivating case

struct MotivatingReport {
  Matrix h_bar;
  std::array<double, 2> theta_star{};
  std::array<std::array<double, 2>, 2> domain_optima{};
  std::array<std::array<double, 2>, 2> grads_at_origin{};
  Matrix sigma_g_star;
  double tr_hinv_sigma = 0.0;
  double agreement_at_origin = 0.0;
  double delta = 0.1;
  // Aggregate loss change moving theta_inv by delta from theta*, and the
  // quadratic-model value 1/2 H_11 delta^2.
  double loss_increase = 0.0;
  double loss_increase_quadratic = 0.0;
};

// Every number is recomputed from gaussian_domain_envs(spec).
MotivatingReport motivating_example_report(const GaussianDomainSpec& spec = {}, double delta = 0.1);

// ------------------------------------------------------- remainder (cubic)

struct RemainderRow {
  std::size_t k = 0;
  double expected_excess = 0.0;  // exact: enumerates the binomial over domains
  double closed_form = 0.0;      // tr(H^-1 Sigma_g) / (2K) at theta*
  double remainder = 0.0;        // |expected - closed|
  double scaled = 0.0;           // remainder * K^1.5
};

struct RemainderReport {
  double cubic = 0.0;
  std::vector<RemainderRow> rows;
  // Scaled remainders never exceed 3x the first one.
  bool consistent = false;
};

// Two-domain Gaussian problem plus cubic * theta_inv^3. theta_hat minimises
// the empirical mean of K domains drawn uniformly; Newton's method solves
// each of the K + 1 distinct empirical problems. Informational only.
RemainderReport remainder_spot_check(double cubic = 0.01, const std::vector<std::size_t>& ks = {4, 16, 64});

}  // namespace sage
