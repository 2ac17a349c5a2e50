// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace sage {

// What a random stream is used for. Keeps streams for different purposes
// independent even when they share (trial, step) indices.
enum class Purpose : std::uint64_t {
  descent_noise = 1,
  sgld_noise = 2,
  mc_environments = 3,
  mc_parameter_noise = 4,
  dataset = 5,
  init = 6,
  start_point = 7,
  random_test = 8,
};

// Splittable generator. A Rng is only a 64-bit key; child keys are derived by
// SplitMix64 mixing, and each key seeds its own std::mt19937_64 stream, so a
// stream depends on (seed, path of split indices) and nothing else.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : key_(mix(seed ^ 0x5A6E0F1D2C3B4A59ULL)) {}

  Rng split(std::uint64_t index) const noexcept { return Rng(key_, index); }
  Rng split(Purpose p, std::uint64_t a = 0, std::uint64_t b = 0) const noexcept {
    return split(static_cast<std::uint64_t>(p)).split(a).split(b);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::mt19937_64 engine() const { return std::mt19937_64(key_); }

  // n independent N(0, 1) draws from this key's stream.
  std::vector<double> normals(std::size_t n) const;

 private:
  Rng(std::uint64_t parent, std::uint64_t index) noexcept : key_(mix(parent + mix(index + 0x9E3779B97F4A7C15ULL))) {}

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

inline std::vector<double> Rng::normals(std::size_t n) const {
  auto eng = engine();
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = dist(eng);
  return out;
}

}  // namespace sage
