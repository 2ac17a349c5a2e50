// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal headless line plots. Convenience output only.

#pragma once

#include <array>
#include <string>
#include <vector>

namespace sage::cli {

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_x = false, bool log_y = false);

  void add_series(std::string label, std::string color, std::vector<std::array<double, 2>> points,
                  bool markers = true, double opacity = 1.0);
  void add_marker(std::array<double, 2> at, std::string label, std::string color);

  std::string render(int width = 640, int height = 420) const;

 private:
  struct Series {
    std::string label;
    std::string color;
    std::vector<std::array<double, 2>> points;
    bool markers;
    double opacity;
  };
  std::string title_, x_label_, y_label_;
  bool log_x_, log_y_;
  std::vector<Series> series_;
  std::vector<Series> markers_;
};

}  // namespace sage::cli
