// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/cli/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "sage/errors.hpp"

namespace sage::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* library_version() { return SAGE_VERSION; }

void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string text;
  for (const auto& [k, v] : entries) text += k + "=" + v + "\n";
  write_text(path, text);
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot read '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InvalidArgument("cannot create directory '" + path + "': " + ec.message());
}

}  // namespace sage::cli
