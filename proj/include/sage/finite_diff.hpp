// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Central-difference derivative oracles. Used to check every analytic
// gradient and Hessian in the project; never on a hot path.

#pragma once

#include <cstddef>
#include <functional>

#include "sage/linalg.hpp"
#include "sage/param_set.hpp"

namespace sage {

using ScalarFn = std::function<double(const ParamSet&)>;

inline constexpr double kGradientStep = 1e-5;
inline constexpr double kHessianStep = 1e-4;
inline constexpr std::size_t kMaxHessianDim = 200;

// (f(x + h e_i) - f(x - h e_i)) / 2h per flattened coordinate.
// Throws NonFiniteLoss if any probe is NaN/Inf.
ParamSet finite_diff_gradient(const ScalarFn& f, const ParamSet& theta, double h = kGradientStep);

// Symmetrised second central differences over flattened coordinates.
// Throws DimensionTooLarge when dim(theta) > kMaxHessianDim.
Matrix finite_diff_hessian(const ScalarFn& f, const ParamSet& theta, double h = kHessianStep);

}  // namespace sage
