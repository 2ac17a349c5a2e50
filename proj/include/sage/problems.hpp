// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Concrete multi-distribution problems:
//  - the quadratic family L_e(theta) = 1/2 theta^T A theta + b_e^T theta,
//  - the two-domain Gaussian linear-regression task with a sign-flipping
//    spurious feature (closed-form population losses),
//  - a 2-64-2 ReLU MLP on concentric circles,
//  - a two-minimum 2-D landscape with a low-agreement and a high-agreement
//    basin.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sage/environment.hpp"
#include "sage/linalg.hpp"
#include "sage/param_set.hpp"

namespace sage {

// ---------------------------------------------------------------- quadratic

class QuadraticFamily {
 public:
  // Offsets are re-centred so their mean is zero. Throws NotPositiveDefinite
  // for a bad curvature matrix and InvalidArgument for an empty or ragged
  // offset set.
  QuadraticFamily(Matrix curvature, std::vector<std::vector<double>> offsets);

  const SymPD& curvature() const noexcept { return curvature_; }
  const std::vector<std::vector<double>>& offsets() const noexcept { return offsets_; }
  std::size_t dimension() const noexcept { return curvature_.dim(); }
  std::size_t size() const noexcept { return offsets_.size(); }

  // Population risk R(theta) = 1/2 theta^T A theta (offsets have zero mean).
  double population_risk(std::span<const double> theta) const;

 private:
  SymPD curvature_;
  std::vector<std::vector<double>> offsets_;
};

Environment quadratic_env(const SymPD& curvature, std::vector<double> offset, std::string id);
EnvList quadratic_envs(const QuadraticFamily& family);

// ---------------------------------------------------- Gaussian two domains

struct GaussianDomainSpec {
  double mu_inv = 1.0;
  double var_inv = 9.0;
  double mu_spur = 2.0;
  double var_spur = 0.01;

  // c_k: +mu_spur for domain 0, -mu_spur for domain 1.
  double spurious_mean(std::size_t domain) const { return domain == 0 ? mu_spur : -mu_spur; }
  void validate() const;
};

// Exact population squared-error losses of the linear model
// f(x) = theta_inv x_inv + theta_spur x_spur for both domains. `cubic_inv`
// adds cubic_inv * theta_inv^3 to each domain loss (zero by default); it
// breaks the quadratic structure for remainder checks.
EnvList gaussian_domain_envs(const GaussianDomainSpec& spec = {}, double cubic_inv = 0.0);

// Closed-form per-domain Hessian and linear coefficient: L_k = 1/2 - b_k.theta + 1/2 theta^T H_k theta.
Matrix gaussian_domain_hessian(const GaussianDomainSpec& spec, std::size_t domain);
std::array<double, 2> gaussian_domain_offset(const GaussianDomainSpec& spec, std::size_t domain);

// --------------------------------------------------------------------- MLP

struct CirclesDataset {
  std::vector<std::array<double, 2>> x;
  std::vector<int> label;  // 0: inner circle, 1: outer circle
};

struct MlpOptions {
  std::size_t points = 400;
  double inner_radius = 1.0;
  double outer_radius = 2.0;
  double radial_noise = 0.1;
  std::size_t hidden = 64;
  std::size_t environments = 2;
  double first_layer_init_std = 1.0;
};

struct MlpProblem {
  CirclesDataset data;
  ParamSet init;  // w1 (H x 2), [b1 (H)], w2 (2 x H), [b2 (2)]
  EnvList envs;   // class-balanced shards of the dataset
  bool with_bias = true;
};

CirclesDataset make_circles(std::uint64_t seed, const MlpOptions& opts = {});

// Linear(2, H) -> ReLU -> Linear(H, 2), loss 1/2 ||out - onehot||^2 averaged
// over a shard. Dataset and initialisation are deterministic in `seed`.
MlpProblem mlp_problem(std::uint64_t seed, bool with_bias, const MlpOptions& opts = {});

// (w1, b1, w2) -> (alpha w1, alpha b1, w2 / alpha); computes the same function
// for alpha > 0.
ParamSet rescale_mlp(const ParamSet& params, double alpha);

// ------------------------------------------------------------------- toy 2D

struct Toy2DWell {
  std::array<double, 2> center;
  double depth;
  double width;
};

// Two per-domain losses over R^2, each two inverted Gaussian wells plus a
// shared quadratic confinement. The domains share the well at B and use
// mirror-image wells around A, so their gradients conflict near A and agree
// near B.
class Toy2DLandscape {
 public:
  Toy2DLandscape();
  // Environments capture `this`.
  Toy2DLandscape(const Toy2DLandscape&) = delete;
  Toy2DLandscape& operator=(const Toy2DLandscape&) = delete;

  const EnvList& envs() const noexcept { return envs_; }
  std::array<double, 2> minimum_a() const noexcept { return minimum_a_; }
  std::array<double, 2> minimum_b() const noexcept { return minimum_b_; }

  double domain_loss(std::size_t domain, std::array<double, 2> p) const;
  std::array<double, 2> domain_grad(std::size_t domain, std::array<double, 2> p) const;
  double aggregate_loss(std::array<double, 2> p) const;
  std::array<double, 2> aggregate_grad(std::array<double, 2> p) const;
  // Pairwise cosine of the two domain gradients.
  double agreement(std::array<double, 2> p) const;

  // 0 for minimum A, 1 for minimum B: whichever is nearer.
  int classify(std::array<double, 2> p) const;

  static constexpr double kConfinement = 0.05;

 private:
  std::array<std::array<Toy2DWell, 2>, 2> wells_;
  std::array<double, 2> minimum_a_;
  std::array<double, 2> minimum_b_;
  EnvList envs_;
};

const Toy2DLandscape& toy2d_landscape();

}  // namespace sage
