// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/param_set.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "sage/errors.hpp"

namespace sage {

std::size_t Tensor::matrix_rows() const noexcept {
  if (shape.size() < 2) return 1;
  return std::accumulate(shape.begin(), shape.end() - 1, std::size_t{1}, std::multiplies<>());
}

std::size_t Tensor::matrix_cols() const noexcept { return shape.empty() ? 0 : shape.back(); }

Matrix Tensor::as_matrix() const {
  if (kind() == TensorKind::vector) return Matrix(1, values.size(), values);
  return Matrix(matrix_rows(), matrix_cols(), values);
}

ParamSet& ParamSet::add(std::string name, std::vector<std::size_t> shape, std::vector<double> values) {
  if (index_of(name)) throw InvalidArgument("duplicate tensor name '" + name + "'");
  if (shape.empty()) throw InvalidArgument("tensor '" + name + "' has an empty shape");
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (n == 0 || n != values.size()) {
    throw InvalidArgument("tensor '" + name + "' has " + std::to_string(values.size()) +
                          " values for " + std::to_string(n) + " slots");
  }
  tensors_.push_back(Tensor{std::move(name), std::move(shape), std::move(values)});
  return *this;
}

ParamSet& ParamSet::add_vector(std::string name, std::vector<double> values) {
  const std::size_t n = values.size();
  return add(std::move(name), {n}, std::move(values));
}

ParamSet& ParamSet::add_matrix(std::string name, const Matrix& m) {
  return add(std::move(name), {m.rows(), m.cols()}, m.values());
}

const Tensor& ParamSet::at(const std::string& name) const {
  if (auto i = index_of(name)) return tensors_[*i];
  throw InvalidArgument("no tensor named '" + name + "'");
}

Tensor& ParamSet::at(const std::string& name) {
  if (auto i = index_of(name)) return tensors_[*i];
  throw InvalidArgument("no tensor named '" + name + "'");
}

std::optional<std::size_t> ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name == name) return i;
  return std::nullopt;
}

std::size_t ParamSet::dimension() const noexcept {
  std::size_t d = 0;
  for (const auto& t : tensors_) d += t.size();
  return d;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(dimension());
  for (const auto& t : tensors_) flat.insert(flat.end(), t.values.begin(), t.values.end());
  return flat;
}

ParamSet ParamSet::unflatten(std::span<const double> flat) const {
  ParamSet out = *this;
  out.assign(flat);
  return out;
}

void ParamSet::assign(std::span<const double> flat) {
  if (flat.size() != dimension()) {
    throw ShapeMismatch("flat vector has " + std::to_string(flat.size()) + " entries, ParamSet has " +
                        std::to_string(dimension()));
  }
  std::size_t offset = 0;
  for (auto& t : tensors_) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + t.size()), t.values.begin());
    offset += t.size();
  }
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  for (auto& t : out.tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape) return false;
  }
  return true;
}

void ParamSet::axpy(double a, const ParamSet& x) {
  if (!same_layout(x)) throw ShapeMismatch("axpy on ParamSets with different layouts");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& dst = tensors_[i].values;
    const auto& src = x.tensors_[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += a * src[j];
  }
}

void ParamSet::scale(double s) {
  for (auto& t : tensors_)
    for (double& v : t.values) v *= s;
}

double ParamSet::l2_norm() const {
  double acc = 0.0;
  for (const auto& t : tensors_)
    for (double v : t.values) acc += v * v;
  return std::sqrt(acc);
}

bool ParamSet::all_finite() const {
  for (const auto& t : tensors_)
    if (!sage::all_finite(t.values)) return false;
  return true;
}

double dot(const ParamSet& a, const ParamSet& b) {
  if (!a.same_layout(b)) throw ShapeMismatch("dot on ParamSets with different layouts");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.tensor_count(); ++i) {
    const auto& x = a[i].values;
    const auto& y = b[i].values;
    for (std::size_t j = 0; j < x.size(); ++j) acc += x[j] * y[j];
  }
  return acc;
}

ParamSet make_theta(std::span<const double> values) {
  ParamSet p;
  p.add_vector("theta", std::vector<double>(values.begin(), values.end()));
  return p;
}

ParamSet make_theta(std::initializer_list<double> values) {
  return make_theta(std::span<const double>(values.begin(), values.size()));
}

}  // namespace sage
