// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// RFC-4180 CSV writer with LF line endings. Numbers use the shortest
// round-trip decimal form, so equal doubles always print identically.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sage::cli {

std::string format_double(double x);
std::string format_uint(std::uint64_t x);

// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<std::string> fields) { row(std::vector<std::string>(fields)); }

 private:
  std::ostream& out_;
};

}  // namespace sage::cli
