// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/finite_diff.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sage/errors.hpp"

namespace sage {

namespace {

class Prober {
 public:
  Prober(const ScalarFn& f, const ParamSet& theta) : f_(f), base_(theta.flatten()), work_(theta) {}

  // f at base + sum of (coordinate, offset) shifts.
  double at(std::initializer_list<std::pair<std::size_t, double>> shifts) {
    std::vector<double> x = base_;
    for (auto [i, d] : shifts) x[i] += d;
    work_.assign(x);
    const double v = f_(work_);
    if (!std::isfinite(v)) throw NonFiniteLoss("finite-difference probe evaluated to " + std::to_string(v));
    return v;
  }

  std::size_t dim() const { return base_.size(); }

 private:
  const ScalarFn& f_;
  std::vector<double> base_;
  ParamSet work_;
};

}  // namespace

ParamSet finite_diff_gradient(const ScalarFn& f, const ParamSet& theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Prober probe(f, theta);
  std::vector<double> g(probe.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = (probe.at({{i, h}}) - probe.at({{i, -h}})) / (2.0 * h);
  }
  return theta.unflatten(g);
}

Matrix finite_diff_hessian(const ScalarFn& f, const ParamSet& theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (theta.dimension() > kMaxHessianDim) {
    throw DimensionTooLarge("finite_diff_hessian supports at most " + std::to_string(kMaxHessianDim) +
                            " coordinates, got " + std::to_string(theta.dimension()));
  }
  Prober probe(f, theta);
  const std::size_t d = probe.dim();
  Matrix hess(d, d);
  const double f0 = probe.at({});
  for (std::size_t i = 0; i < d; ++i) {
    hess(i, i) = (probe.at({{i, h}}) - 2.0 * f0 + probe.at({{i, -h}})) / (h * h);
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = (probe.at({{i, h}, {j, h}}) - probe.at({{i, h}, {j, -h}}) -
                        probe.at({{i, -h}, {j, h}}) + probe.at({{i, -h}, {j, -h}})) /
                       (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

}  // namespace sage
