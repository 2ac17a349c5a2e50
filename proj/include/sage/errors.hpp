// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sage {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gradient (or gradient block) has zero norm where a direction is required.
class ZeroGradient : public Error {
 public:
  explicit ZeroGradient(const std::string& what) : Error("zero gradient: " + what) {}
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error("not positive definite: " + what) {}
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(const std::string& what) : Error("non-finite value: " + what) {}
};

class DimensionTooLarge : public Error {
 public:
  explicit DimensionTooLarge(const std::string& what) : Error("dimension too large: " + what) {}
};

class TooFewEnvironments : public Error {
 public:
  explicit TooFewEnvironments(const std::string& what) : Error("too few environments: " + what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid argument: " + what) {}
};

}  // namespace sage
