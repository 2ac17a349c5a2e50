// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sage::cli {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

const char* library_version();

// Writes `key=value` lines in the given order. No timestamps, so identical
// runs produce identical manifests.
void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries);

void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace sage::cli
