// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/optim.hpp"

#include <cmath>
#include <string>
#include <type_traits>
#include <utility>

#include "sage/errors.hpp"
#include "sage/linalg.hpp"
#include "sage/stats.hpp"

namespace sage {

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::sam_l2:
      return "sam_l2";
    case PerturbationKind::spectral:
      return "spectral";
    case PerturbationKind::adaptive_l2:
      return "adaptive_l2";
  }
  return "unknown";
}

PerturbationKind perturbation_kind_from_string(const std::string& name) {
  if (name == "sam_l2") return PerturbationKind::sam_l2;
  if (name == "spectral") return PerturbationKind::spectral;
  if (name == "adaptive_l2") return PerturbationKind::adaptive_l2;
  throw InvalidArgument("unknown perturbation rule '" + name + "'");
}

void PerturbationRule::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("perturbation radius rho must be > 0");
  if (ns_iters < 1) throw InvalidArgument("Newton-Schulz iteration count must be >= 1");
  if (!(adaptive_eta >= 0.0)) throw InvalidArgument("adaptive eta must be >= 0");
}

namespace {

// out = values * (rho / ||values||). Shared by the whole-model and the
// per-vector rules so that both produce identical bits on identical input.
void scaled_direction(std::span<const double> values, double rho, std::span<double> out) {
  const double scale = rho / l2_norm(values);
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * scale;
}

}  // namespace

ParamSet sam_perturbation(const ParamSet& grad, double rho) {
  const std::vector<double> g = grad.flatten();
  if (l2_norm(g) == 0.0) throw ZeroGradient("SAM perturbation needs a nonzero gradient");
  std::vector<double> eps(g.size());
  scaled_direction(g, rho, eps);
  return grad.unflatten(eps);
}

SpectralPerturbation spectral_perturbation(const ParamSet& theta, const ParamSet& grad, double rho, int ns_iters) {
  if (!theta.same_layout(grad)) throw ShapeMismatch("gradient layout differs from parameters");
  SpectralPerturbation out{grad.zeros_like(), true};
  for (std::size_t t = 0; t < grad.tensor_count(); ++t) {
    const Tensor& g = grad[t];
    if (l2_norm(g.values) == 0.0) continue;
    out.all_zero = false;
    auto& eps = out.epsilon[t].values;
    if (g.kind() == TensorKind::vector) {
      scaled_direction(g.values, rho, eps);
    } else {
      const Matrix q = newton_schulz_polar(g.as_matrix(), ns_iters);
      const double radius = rho * l2_norm(theta[t].values);
      for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = q.data()[i] * radius;
    }
  }
  return out;
}

ParamSet adaptive_perturbation(const ParamSet& theta, const ParamSet& grad, double rho, double eta) {
  if (!theta.same_layout(grad)) throw ShapeMismatch("gradient layout differs from parameters");
  const std::vector<double> w = theta.flatten();
  const std::vector<double> g = grad.flatten();
  std::vector<double> tg(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) tg[i] = (std::abs(w[i]) + eta) * g[i];
  const double norm = l2_norm(tg);
  if (norm == 0.0) throw ZeroGradient("adaptive perturbation needs a nonzero scaled gradient");
  std::vector<double> eps(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) eps[i] = rho * (std::abs(w[i]) + eta) * tg[i] / norm;
  return grad.unflatten(eps);
}

ParamSet perturbation(const PerturbationRule& rule, const ParamSet& theta, const ParamSet& grad) {
  switch (rule.kind) {
    case PerturbationKind::sam_l2:
      return sam_perturbation(grad, rule.rho);
    case PerturbationKind::spectral:
      return spectral_perturbation(theta, grad, rule.rho, rule.ns_iters).epsilon;
    case PerturbationKind::adaptive_l2:
      return adaptive_perturbation(theta, grad, rule.rho, rule.adaptive_eta);
  }
  throw InvalidArgument("unknown perturbation kind");
}

// ----------------------------------------------------------------- steppers

void validate(const BaseOptimizer& base) {
  std::visit(
      [](const auto& b) {
        if (!(b.lr > 0.0) || !std::isfinite(b.lr)) throw InvalidArgument("learning rate must be > 0");
        if constexpr (std::is_same_v<std::decay_t<decltype(b)>, AdamBase>) {
          if (!(b.beta1 >= 0.0 && b.beta1 < 1.0) || !(b.beta2 >= 0.0 && b.beta2 < 1.0)) {
            throw InvalidArgument("Adam betas must lie in [0, 1)");
          }
          if (!(b.eps > 0.0)) throw InvalidArgument("Adam epsilon must be > 0");
        }
      },
      base);
}

void SageConfig::validate(std::size_t env_count) const {
  rule.validate();
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("noise scale gamma must be >= 0");
  sage::validate(base);
  if (!env_weights.empty() && env_weights.size() != env_count) {
    throw InvalidArgument("expected " + std::to_string(env_count) + " environment weights");
  }
}

namespace {

std::vector<double> resolve_weights(std::size_t k, std::span<const double> weights) {
  if (k == 0) throw TooFewEnvironments("stepper needs at least one environment");
  if (weights.empty()) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  if (weights.size() != k) throw InvalidArgument("environment weight count mismatch");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("environment weights must be finite and >= 0");
  return {weights.begin(), weights.end()};
}

struct Round {
  std::vector<double> losses;
  std::vector<std::vector<double>> grads;  // flattened per environment
  ParamSet total;
  double total_loss = 0.0;
};

// One gradient round over every environment, with finiteness checks.
Round evaluate_round(std::span<const Environment> envs, const ParamSet& theta, std::span<const double> weights,
                     StepReport& report) {
  Round r;
  r.total = theta.zeros_like();
  for (std::size_t k = 0; k < envs.size(); ++k) {
    Evaluation ev = envs[k].evaluate(theta);
    ++report.env_evaluations;
    if (!std::isfinite(ev.loss)) throw NonFiniteLoss("loss of environment '" + envs[k].id + "'");
    if (!ev.grad.all_finite()) throw NonFiniteLoss("gradient of environment '" + envs[k].id + "'");
    r.total.axpy(weights[k], ev.grad);
    r.total_loss += weights[k] * ev.loss;
    r.losses.push_back(ev.loss);
    r.grads.push_back(ev.grad.flatten());
  }
  ++report.grad_rounds;
  return r;
}

// Perturbation that degrades to zero instead of throwing on a zero gradient.
ParamSet safe_perturbation(const PerturbationRule& rule, const ParamSet& theta, const ParamSet& grad,
                           bool& zero) {
  zero = false;
  if (rule.kind == PerturbationKind::spectral) {
    auto sp = spectral_perturbation(theta, grad, rule.rho, rule.ns_iters);
    zero = sp.all_zero;
    return std::move(sp.epsilon);
  }
  try {
    return perturbation(rule, theta, grad);
  } catch (const ZeroGradient&) {
    zero = true;
    return grad.zeros_like();
  }
}

// Base-optimizer update into a fresh state; the caller commits it.
OptimState apply_base(const OptimState& state, const BaseOptimizer& base, std::span<const double> g) {
  OptimState next = state;
  std::vector<double> theta = state.params.flatten();
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, SgdBase>) {
          for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= b.lr * g[i];
        } else {
          if (next.first_moment.empty()) {
            next.first_moment.assign(theta.size(), 0.0);
            next.second_moment.assign(theta.size(), 0.0);
          }
          const double t = static_cast<double>(state.step + 1);
          const double c1 = 1.0 - std::pow(b.beta1, t);
          const double c2 = 1.0 - std::pow(b.beta2, t);
          for (std::size_t i = 0; i < theta.size(); ++i) {
            double& m = next.first_moment[i];
            double& v = next.second_moment[i];
            m = b.beta1 * m + (1.0 - b.beta1) * g[i];
            v = b.beta2 * v + (1.0 - b.beta2) * g[i] * g[i];
            theta[i] -= b.lr * (m / c1) / (std::sqrt(v / c2) + b.eps);
          }
        }
      },
      base);
  if (!all_finite(theta)) throw NonFiniteLoss("parameters after the optimizer update");
  next.params.assign(theta);
  next.step = state.step + 1;
  return next;
}

void fill_losses(StepReport& report, const Round& round) {
  report.env_losses = round.losses;
  report.aggregate_loss = round.total_loss;
}

ParamSet shifted(const ParamSet& theta, const ParamSet& eps) {
  ParamSet p = theta;
  p.axpy(1.0, eps);
  return p;
}

}  // namespace

ParamSet weighted_gradient(std::span<const Environment> envs, const ParamSet& theta, std::span<const double> weights) {
  const auto w = resolve_weights(envs.size(), weights);
  StepReport scratch;
  return evaluate_round(envs, theta, w, scratch).total;
}

StepReport sgd_step(OptimState& state, std::span<const Environment> envs, const BaseOptimizer& base,
                    std::span<const double> weights) {
  validate(base);
  const auto w = resolve_weights(envs.size(), weights);
  StepReport report;
  const Round round = evaluate_round(envs, state.params, w, report);
  fill_losses(report, round);
  if (envs.size() >= 2) report.agreement = gradient_agreement(round.grads);
  state = apply_base(state, base, round.total.flatten());
  return report;
}

StepReport sam_step(OptimState& state, std::span<const Environment> envs, const PerturbationRule& rule,
                    const BaseOptimizer& base, std::span<const double> weights) {
  rule.validate();
  validate(base);
  const auto w = resolve_weights(envs.size(), weights);
  StepReport report;
  const Round clean = evaluate_round(envs, state.params, w, report);
  fill_losses(report, clean);
  if (envs.size() >= 2) report.agreement = gradient_agreement(clean.grads);
  const ParamSet eps = safe_perturbation(rule, state.params, clean.total, report.zero_perturbation);
  report.eps_norm = eps.l2_norm();
  const Round perturbed = evaluate_round(envs, shifted(state.params, eps), w, report);
  state = apply_base(state, base, perturbed.total.flatten());
  return report;
}

StepReport sgld_step(OptimState& state, std::span<const Environment> envs, const BaseOptimizer& base, double sigma,
                     const Rng& rng, std::span<const double> weights) {
  validate(base);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("SGLD noise std must be >= 0");
  const auto w = resolve_weights(envs.size(), weights);
  StepReport report;
  const Round round = evaluate_round(envs, state.params, w, report);
  fill_losses(report, round);
  if (envs.size() >= 2) report.agreement = gradient_agreement(round.grads);
  std::vector<double> g = round.total.flatten();
  if (sigma != 0.0) {
    const auto xi = rng.split(Purpose::sgld_noise, state.step).normals(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += sigma * xi[i];
  }
  report.beta = sigma;
  state = apply_base(state, base, g);
  return report;
}

std::vector<double> descent_noise(const Rng& rng, std::uint64_t step, std::size_t dim) {
  return rng.split(Purpose::descent_noise, step).normals(dim);
}

StepReport sage_step(OptimState& state, std::span<const Environment> envs, const SageConfig& cfg, const Rng& rng) {
  if (envs.size() < 2) throw TooFewEnvironments("SAGE needs at least two environments");
  cfg.validate(envs.size());
  const auto w = resolve_weights(envs.size(), cfg.env_weights);
  StepReport report;

  // Phase 1
  const Round clean = evaluate_round(envs, state.params, w, report);
  fill_losses(report, clean);
  // Phase 2
  report.agreement = gradient_agreement(clean.grads);
  report.beta = noise_scale(report.agreement, cfg.gamma);
  // Phase 3
  const ParamSet eps = safe_perturbation(cfg.rule, state.params, clean.total, report.zero_perturbation);
  report.eps_norm = eps.l2_norm();
  // Phases 4-5
  const Round perturbed = evaluate_round(envs, shifted(state.params, eps), w, report);
  // Phase 6: the clean weights were never overwritten; inject noise.
  std::vector<double> g_final = perturbed.total.flatten();
  if (report.beta != 0.0) {
    const auto xi = descent_noise(rng, state.step, g_final.size());
    for (std::size_t i = 0; i < g_final.size(); ++i) g_final[i] += report.beta * xi[i];
  }
  // Phase 7
  state = apply_base(state, cfg.base, g_final);
  return report;
}

// ---------------------------------------------------------------- sharpness

double sharpness_probe_with_gradient(const ParamSet& theta, const ParamSet& grad, const PerturbationRule& rule,
                                     std::span<const Environment> envs) {
  rule.validate();
  if (grad.l2_norm() == 0.0) throw ZeroGradient("sharpness probe at a stationary point");
  const ParamSet eps = perturbation(rule, theta, grad);
  return aggregate_loss(envs, shifted(theta, eps)) - aggregate_loss(envs, theta);
}

double sharpness_probe(const ParamSet& theta, const PerturbationRule& rule, std::span<const Environment> envs) {
  return sharpness_probe_with_gradient(theta, weighted_gradient(envs, theta), rule, envs);
}

}  // namespace sage
