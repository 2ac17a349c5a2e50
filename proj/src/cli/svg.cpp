// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sage::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_x, bool log_y)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)), log_x_(log_x),
      log_y_(log_y) {}

void SvgPlot::add_series(std::string label, std::string color, std::vector<std::array<double, 2>> points,
                         bool markers, double opacity) {
  series_.push_back({std::move(label), std::move(color), std::move(points), markers, opacity});
}

void SvgPlot::add_marker(std::array<double, 2> at, std::string label, std::string color) {
  markers_.push_back({std::move(label), std::move(color), {at}, true, 1.0});
}

std::string SvgPlot::render(int width, int height) const {
  auto tx = [&](double v) { return log_x_ ? std::log10(std::max(v, 1e-300)) : v; };
  auto ty = [&](double v) { return log_y_ ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto extend = [&](const Series& s) {
    for (const auto& p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      x0 = std::min(x0, tx(p[0]));
      x1 = std::max(x1, tx(p[0]));
      y0 = std::min(y0, ty(p[1]));
      y1 = std::max(y1, ty(p[1]));
    }
  };
  for (const auto& s : series_) extend(s);
  for (const auto& s : markers_) extend(s);
  if (!(x0 < x1)) { x0 -= 1; x1 += 1; }
  if (!(y0 < y1)) { y0 -= 1; y1 += 1; }
  const double pad_y = 0.05 * (y1 - y0);
  y0 -= pad_y;
  y1 += pad_y;

  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(left) + "\" y=\"22\" font-size=\"14\">" + escape(title_) + "</text>\n";
  svg += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double vx = log_x_ ? std::pow(10.0, fx) : fx, vy = log_y_ ? std::pow(10.0, fy) : fy;
    svg += "<text x=\"" + num(left + pw * i / 4.0) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" +
           tick(vx) + "</text>\n";
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(top + ph - ph * i / 4.0 + 4) + "\" text-anchor=\"end\">" +
           tick(vy) + "</text>\n";
  }
  svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 10.0) + "\" text-anchor=\"middle\">" +
         escape(x_label_) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num(top + ph / 2) + "\" transform=\"rotate(-90 16 " + num(top + ph / 2) +
         ")\" text-anchor=\"middle\">" + escape(y_label_) + "</text>\n";

  int legend_row = 0;
  for (const auto& s : series_) {
    std::string path;
    for (const auto& p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      path += (path.empty() ? "M" : " L") + num(px(p[0])) + " " + num(py(p[1]));
    }
    svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-opacity=\"" + num(s.opacity) +
           "\" stroke-width=\"1.5\"/>\n";
    if (s.markers) {
      for (const auto& p : s.points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
        svg += "<circle cx=\"" + num(px(p[0])) + "\" cy=\"" + num(py(p[1])) + "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
      }
    }
    if (!s.label.empty()) {
      const double ly = top + 10 + 18 * legend_row++;
      svg += "<line x1=\"" + num(left + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 30) +
             "\" y2=\"" + num(ly) + "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
      svg += "<text x=\"" + num(left + pw + 36) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.label) + "</text>\n";
    }
  }
  for (const auto& m : markers_) {
    const auto& p = m.points.front();
    svg += "<circle cx=\"" + num(px(p[0])) + "\" cy=\"" + num(py(p[1])) + "\" r=\"6\" fill=\"none\" stroke=\"" +
           m.color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(px(p[0]) + 8) + "\" y=\"" + num(py(p[1]) - 8) + "\">" + escape(m.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace sage::cli
