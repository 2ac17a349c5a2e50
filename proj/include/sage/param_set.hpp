// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sage/linalg.hpp"

namespace sage {

enum class TensorKind : std::uint8_t { vector = 0, matrix = 1 };

// One named parameter block. Rank-1 shapes are vectors; rank >= 2 shapes are
// treated as matrices by collapsing all leading dimensions into rows
// (a 2x3x4 tensor is viewed as 6x4).
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  TensorKind kind() const noexcept { return shape.size() >= 2 ? TensorKind::matrix : TensorKind::vector; }
  std::size_t size() const noexcept { return values.size(); }
  std::size_t matrix_rows() const noexcept;
  std::size_t matrix_cols() const noexcept;
  Matrix as_matrix() const;

  bool operator==(const Tensor&) const = default;
};

// Ordered list of named tensors. Flattened coordinates concatenate tensors in
// insertion order, row-major within each tensor; Hessians and covariances
// over a ParamSet use the same order.
class ParamSet {
 public:
  ParamSet() = default;

  // Throws InvalidArgument on duplicate names, empty shapes or size mismatch.
  ParamSet& add(std::string name, std::vector<std::size_t> shape, std::vector<double> values);
  ParamSet& add_vector(std::string name, std::vector<double> values);
  ParamSet& add_matrix(std::string name, const Matrix& m);

  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  std::size_t tensor_count() const noexcept { return tensors_.size(); }
  const Tensor& operator[](std::size_t i) const { return tensors_.at(i); }
  Tensor& operator[](std::size_t i) { return tensors_.at(i); }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  std::optional<std::size_t> index_of(const std::string& name) const;

  std::size_t dimension() const noexcept;
  std::vector<double> flatten() const;
  // New ParamSet with this layout and the given flat values.
  ParamSet unflatten(std::span<const double> flat) const;
  void assign(std::span<const double> flat);
  ParamSet zeros_like() const;

  bool same_layout(const ParamSet& other) const;

  // this += a * x
  void axpy(double a, const ParamSet& x);
  void scale(double s);
  double l2_norm() const;
  bool all_finite() const;

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

double dot(const ParamSet& a, const ParamSet& b);

// Single-vector ParamSet named "theta"; used by the low-dimensional problems.
ParamSet make_theta(std::span<const double> values);
ParamSet make_theta(std::initializer_list<double> values);

}  // namespace sage
