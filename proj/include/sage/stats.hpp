// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sage/environment.hpp"
#include "sage/linalg.hpp"
#include "sage/param_set.hpp"

namespace sage {

// Cross-environment summary at one parameter point. All averages use uniform
// weights with divisor K.
struct EnvStats {
  std::vector<double> g_bar;
  std::optional<Matrix> h_bar;  // absent unless every environment has a Hessian
  Matrix sigma_g;               // (1/K) sum (g_e - g_bar)(g_e - g_bar)^T
  double agreement = 0.0;
  std::size_t k = 0;
  std::vector<std::vector<double>> env_grads;  // flattened, environment order
  std::vector<double> env_losses;

  bool has_hessian() const noexcept { return h_bar.has_value(); }
};

// Throws TooFewEnvironments when fewer than two environments are given.
EnvStats env_stats(std::span<const Environment> envs, const ParamSet& theta);

// Mean pairwise cosine 2/(K(K-1)) sum_{i<j} cos(g_i, g_j). A pair where
// either norm is <= 1e-12 contributes 0 while still counting in the
// denominator. Identical vectors give exactly 1.
double gradient_agreement(std::span<const std::vector<double>> grads);

// beta = gamma (1 - S).
double noise_scale(double agreement, double gamma);

// Running mean whose result is bit-exact when all inputs are identical.
void accumulate_mean(std::span<double> mean, std::span<const double> x, std::size_t count_before);

}  // namespace sage
