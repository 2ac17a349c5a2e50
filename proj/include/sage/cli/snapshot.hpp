// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Binary ParamSet snapshots. Layout, all integers little-endian:
//   "SAGEPS1\n"
//   u32 tensor count
//   per tensor: u16 name length, UTF-8 name, u8 kind (0 vector, 1 matrix),
//               u32 rank, rank x u32 extents, f64 values (row-major)

#pragma once

#include <string>

#include "sage/optim.hpp"
#include "sage/param_set.hpp"

namespace sage::cli {

inline constexpr char kSnapshotMagic[] = "SAGEPS1\n";

std::string encode_snapshot(const ParamSet& params);
// Throws InvalidArgument on a malformed or truncated buffer.
ParamSet decode_snapshot(const std::string& bytes);

void write_snapshot(const std::string& path, const ParamSet& params);
ParamSet read_snapshot(const std::string& path);

// Optimizer state as a snapshot: parameters under "param/<name>", then
// "optim/step" and, when present, "optim/m" and "optim/v".
ParamSet state_to_snapshot(const OptimState& state);
OptimState state_from_snapshot(const ParamSet& snap);

}  // namespace sage::cli
