// Copyright 2026 The cmaml-mppi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cmaml::harness {

/// Minimal SVG document with fixed number formatting so output is
/// byte-stable.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1.0);
  void line(double x0, double y0, double x1, double y1, const std::string& stroke, double width = 1.0,
            bool dashed = false);
  void polyline(std::span<const double> xs, std::span<const double> ys, const std::string& stroke,
                double width = 1.0);
  void circle(double cx, double cy, double r, const std::string& fill);
  /// anchor: start, middle or end.
  void text(double x, double y, const std::string& s, double size = 12.0, const std::string& anchor = "start");

  [[nodiscard]] std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_;
  double height_;
  std::string body_;
};

/// Axis-aligned data-to-pixel mapping inside a plot panel.
struct PlotFrame {
  double left = 0.0, top = 0.0, width = 0.0, height = 0.0;  // panel in pixels
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  [[nodiscard]] double px(double x) const;
  [[nodiscard]] double py(double y) const;
};

/// Draws the panel border, ticks, tick labels and axis titles.
void draw_axes(SvgDocument& doc, const PlotFrame& f, const std::string& x_label, const std::string& y_label,
               int ticks = 5);

/// Series mapped through the frame; points outside the y range are clipped.
void plot_series(SvgDocument& doc, const PlotFrame& f, std::span<const double> xs, std::span<const double> ys,
                 const std::string& color, double width = 1.2);

/// Legend entries stacked from (x, y).
void draw_legend(SvgDocument& doc, double x, double y, const std::vector<std::string>& labels,
                 const std::vector<std::string>& colors);

/// "Nice" upper bound for an axis range.
double nice_ceiling(double v);

/// Stable color per mode name.
std::string mode_color(const std::string& mode);

}  // namespace cmaml::harness
