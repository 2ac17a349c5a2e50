// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sage/linalg.hpp"
#include "sage/param_set.hpp"

namespace sage {

struct Evaluation {
  double loss = 0.0;
  ParamSet grad;
};

// One training distribution. Immutable after construction; every callable is
// pure and safe to invoke concurrently.
struct Environment {
  std::string id;
  std::function<double(const ParamSet&)> loss;
  std::function<Evaluation(const ParamSet&)> evaluate;
  // Empty when the problem has no closed-form Hessian. Indexed by flattened
  // ParamSet coordinates.
  std::function<Matrix(const ParamSet&)> hessian;

  ParamSet grad(const ParamSet& theta) const { return evaluate(theta).grad; }
  bool has_hessian() const noexcept { return static_cast<bool>(hessian); }
};

using EnvList = std::vector<Environment>;

// Uniform-weight mean of the environment losses.
double aggregate_loss(std::span<const Environment> envs, const ParamSet& theta);

}  // namespace sage
