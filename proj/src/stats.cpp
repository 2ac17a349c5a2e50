// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sage/errors.hpp"

namespace sage {

namespace {
constexpr double kDegenerateNorm = 1e-12;
}

void accumulate_mean(std::span<double> mean, std::span<const double> x, std::size_t count_before) {
  if (mean.size() != x.size()) throw ShapeMismatch("running mean of unequal lengths");
  const double n = static_cast<double>(count_before + 1);
  for (std::size_t i = 0; i < x.size(); ++i) mean[i] += (x[i] - mean[i]) / n;
}

double gradient_agreement(std::span<const std::vector<double>> grads) {
  const std::size_t k = grads.size();
  if (k < 2) throw TooFewEnvironments("gradient agreement needs at least two gradients, got " + std::to_string(k));
  std::vector<double> sq(k);
  for (std::size_t i = 0; i < k; ++i) sq[i] = dot(grads[i], grads[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (std::sqrt(sq[i]) <= kDegenerateNorm || std::sqrt(sq[j]) <= kDegenerateNorm) continue;
      // sqrt(a * a) == a exactly, so identical vectors give a cosine of 1.
      total += dot(grads[i], grads[j]) / std::sqrt(sq[i] * sq[j]);
    }
  }
  const double s = 2.0 * total / (static_cast<double>(k) * static_cast<double>(k - 1));
  return std::clamp(s, -1.0, 1.0);
}

double noise_scale(double agreement, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidArgument("noise scale gamma must be >= 0");
  if (!(agreement >= -1.0 && agreement <= 1.0)) throw InvalidArgument("agreement must lie in [-1, 1]");
  return gamma * (1.0 - agreement);
}

EnvStats env_stats(std::span<const Environment> envs, const ParamSet& theta) {
  const std::size_t k = envs.size();
  if (k < 2) throw TooFewEnvironments("env_stats needs at least two environments, got " + std::to_string(k));
  EnvStats st;
  st.k = k;
  const std::size_t d = theta.dimension();
  st.g_bar.assign(d, 0.0);
  bool all_hessians = std::all_of(envs.begin(), envs.end(), [](const Environment& e) { return e.has_hessian(); });
  Matrix h_bar(d, d);
  for (std::size_t e = 0; e < k; ++e) {
    Evaluation ev = envs[e].evaluate(theta);
    st.env_losses.push_back(ev.loss);
    st.env_grads.push_back(ev.grad.flatten());
    accumulate_mean(st.g_bar, st.env_grads.back(), e);
    if (all_hessians) {
      const Matrix h = envs[e].hessian(theta);
      if (h.rows() != d || h.cols() != d) throw ShapeMismatch("environment Hessian has the wrong size");
      accumulate_mean(h_bar.data(), h.data(), e);
    }
  }
  if (all_hessians) st.h_bar = std::move(h_bar);

  st.sigma_g = Matrix(d, d);
  std::vector<double> centred(d);
  for (const auto& g : st.env_grads) {
    for (std::size_t i = 0; i < d; ++i) centred[i] = g[i] - st.g_bar[i];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) st.sigma_g(i, j) += centred[i] * centred[j];
  }
  st.sigma_g *= 1.0 / static_cast<double>(k);
  st.agreement = gradient_agreement(st.env_grads);
  return st;
}

}  // namespace sage
