// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Ascent perturbations (SAM, element-wise adaptive, spectral) and the
// steppers built on them: SGD, SGLD, SAM and SAGE.
//
// A SAGE step, in order:
//   1. per-environment losses and gradients, weighted total g_w = sum w_k g_k
//   2. agreement S over the per-environment gradients, beta = gamma (1 - S)
//   3. perturbation eps from g_w: for every matrix W with gradient G,
//      eps_W = rho ||W||_F NS_T(G); for vectors eps_b = rho g / ||g||
//   4. move to theta + eps
//   5. perturbed total gradient g_pert at theta + eps
//   6. back to theta, g_final = g_pert + beta xi, xi ~ N(0, I)
//   7. base optimizer update with g_final
// Exactly two gradient rounds (all K environments) per step.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sage/environment.hpp"
#include "sage/param_set.hpp"
#include "sage/rng.hpp"

namespace sage {

enum class PerturbationKind { sam_l2, spectral, adaptive_l2 };

std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& name);

struct PerturbationRule {
  PerturbationKind kind = PerturbationKind::spectral;
  double rho = 0.05;
  int ns_iters = 5;
  // Offset in the element-wise scale |w| + eta of the adaptive rule.
  double adaptive_eta = 0.01;

  void validate() const;
};

// eps = rho g / ||g||_2 over the whole flattened gradient.
// Throws ZeroGradient when ||g|| == 0.
ParamSet sam_perturbation(const ParamSet& grad, double rho);

struct SpectralPerturbation {
  ParamSet epsilon;
  bool all_zero = false;  // every gradient block was zero; epsilon is zero
};

// Per tensor: matrices get rho ||W||_F NS_T(G), vectors rho g / ||g||,
// zero-gradient tensors get zero.
SpectralPerturbation spectral_perturbation(const ParamSet& theta, const ParamSet& grad, double rho,
                                           int ns_iters = 5);

// Element-wise adaptive rule: eps = rho T^2 g / ||T g||, T = |w| + eta.
// Throws ZeroGradient when ||T g|| == 0.
ParamSet adaptive_perturbation(const ParamSet& theta, const ParamSet& grad, double rho, double eta);

// Dispatch on rule.kind. Spectral never throws for zero gradients.
ParamSet perturbation(const PerturbationRule& rule, const ParamSet& theta, const ParamSet& grad);

// ----------------------------------------------------------------- steppers

struct SgdBase {
  double lr = 0.01;
};

struct AdamBase {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using BaseOptimizer = std::variant<SgdBase, AdamBase>;

void validate(const BaseOptimizer& base);

struct OptimState {
  ParamSet params;
  // Adam moments; empty until the first adaptive update.
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  explicit OptimState(ParamSet p) : params(std::move(p)) {}
};

struct StepReport {
  std::vector<double> env_losses;
  double aggregate_loss = 0.0;
  double agreement = 1.0;
  double beta = 0.0;
  double eps_norm = 0.0;
  int grad_rounds = 0;         // full passes over all environments
  int env_evaluations = 0;     // individual environment gradient calls
  bool zero_perturbation = false;
};

struct SageConfig {
  PerturbationRule rule;
  double gamma = 0.0;
  BaseOptimizer base = SgdBase{};
  // Per-environment weights w_k; uniform 1/K when empty.
  std::vector<double> env_weights;

  void validate(std::size_t env_count) const;
};

// Every stepper validates finiteness of losses and gradients before
// touching the state: on NonFiniteLoss the state is unchanged.
// Noise streams are keyed by (rng, state.step), so a resumed run draws the
// same noise as an uninterrupted one.

StepReport sgd_step(OptimState& state, std::span<const Environment> envs, const BaseOptimizer& base,
                    std::span<const double> weights = {});

StepReport sam_step(OptimState& state, std::span<const Environment> envs, const PerturbationRule& rule,
                    const BaseOptimizer& base, std::span<const double> weights = {});

// g = g_w + sigma xi; sigma == 0 is plain SGD.
StepReport sgld_step(OptimState& state, std::span<const Environment> envs, const BaseOptimizer& base,
                     double sigma, const Rng& rng, std::span<const double> weights = {});

StepReport sage_step(OptimState& state, std::span<const Environment> envs, const SageConfig& cfg, const Rng& rng);

// The noise vector a SAGE step at `step` adds before scaling by beta.
std::vector<double> descent_noise(const Rng& rng, std::uint64_t step, std::size_t dim);

// ---------------------------------------------------------------- sharpness

// L(theta + eps) - L(theta) on the uniform aggregate loss, eps from the
// aggregate gradient at theta under `rule`. Throws ZeroGradient when that
// gradient is zero.
double sharpness_probe(const ParamSet& theta, const PerturbationRule& rule, std::span<const Environment> envs);

// Same probe with a caller-supplied gradient (e.g. the last nonzero training
// gradient when the current one vanishes numerically).
double sharpness_probe_with_gradient(const ParamSet& theta, const ParamSet& grad, const PerturbationRule& rule,
                                     std::span<const Environment> envs);

// Weighted total gradient sum_k w_k grad L_k(theta).
ParamSet weighted_gradient(std::span<const Environment> envs, const ParamSet& theta,
                           std::span<const double> weights = {});

}  // namespace sage
