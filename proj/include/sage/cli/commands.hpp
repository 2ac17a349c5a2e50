// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Subcommand drivers. Each writes its CSV/SVG outputs plus
// `config.resolved` and `manifest.txt` into the output directory and returns
// an exit code: 0 pass, 1 gate failure, 2 usage error.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sage/cli/config.hpp"
#include "sage/problems.hpp"
#include "sage/theorylab.hpp"

namespace sage::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitGateFailure = 1;
inline constexpr int kExitUsage = 2;

int run_command(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

// ---------------------------------------------------------------- drivers

QuadraticFamily decomposition_family(const DecompositionConfig& cfg);
std::vector<DecompositionReport> run_decomposition(const DecompositionConfig& cfg, std::uint64_t seed);

struct ScaleInvarianceRow {
  double alpha = 1.0;
  double sharpness_sam = 0.0;
  double sharpness_adaptive = 0.0;
  double sharpness_spectral = 0.0;
  // false when the gradient at the rescaled point vanished and the probe used
  // the last nonzero training gradient instead.
  bool true_gradient = true;
};

struct ScaleInvarianceVariant {
  bool with_bias = true;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<ScaleInvarianceRow> rows;

  // max / min over the alpha grid; +inf when a value is not positive.
  double ratio_sam() const;
  double ratio_adaptive() const;
  double ratio_spectral() const;
  // max |s(alpha) / s(1) - 1| of the spectral column (s(1): the alpha == 1
  // row, else the first row).
  double spectral_max_rel_deviation() const;
};

struct ScaleInvarianceResult {
  ScaleInvarianceVariant with_bias;
  ScaleInvarianceVariant no_bias;
  bool nobias_constant = false;
  bool spectral_bounded = false;
  bool sam_spread = false;

  bool passed() const { return nobias_constant && spectral_bounded && sam_spread; }
};

ScaleInvarianceVariant scale_invariance_variant(const ScaleInvarianceConfig& cfg, std::uint64_t seed, bool with_bias);
ScaleInvarianceResult run_scale_invariance(const ScaleInvarianceConfig& cfg, std::uint64_t seed);

struct Toy2dRun {
  std::string stepper;
  std::size_t run = 0;
  std::array<double, 2> start{};
  std::array<double, 2> final{};
  int basin = -1;  // 0: A, 1: B, -1: diverged
  double final_loss = 0.0;
  std::vector<std::array<double, 2>> trajectory;  // every trajectory_stride steps
};

struct Toy2dResult {
  std::vector<Toy2dRun> runs;
  std::map<std::string, double> fraction_b;
  std::vector<std::string> failures;  // gate violations, one line each

  bool passed() const { return failures.empty(); }
};

Toy2dRun toy2d_run(const Toy2dConfig& cfg, std::uint64_t seed, const std::string& stepper, std::size_t run);
Toy2dResult run_toy2d(const Toy2dConfig& cfg, std::uint64_t seed);

}  // namespace sage::cli
