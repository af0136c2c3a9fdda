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
#include <vector>

namespace cmaml::track {

/// Oval: two straights joined by semicircles. In the track frame the
/// straights run along X at Y = +/-radius and the arcs are centered at
/// (+/-straight_length/2, 0).
struct TrackSpec {
  double straight_length = 3.0;  // [m]
  double radius = 1.5;           // [m]
  double half_width = 0.25;      // zero-cost band half-width w0 [m]
  double ramp_width = 0.5;       // 0 -> 1 ramp width w1 [m]
  double center_x = 0.0;
  double center_y = 0.0;
  double heading = 0.0;  // rotation of the track frame [rad]

  /// Throws std::invalid_argument on non-positive lengths.
  void validate() const;
  [[nodiscard]] double centerline_length() const;
};

/// Unsigned distance from (x, y) to the oval centerline, computed analytically.
double centerline_distance(const TrackSpec& spec, double x, double y);

/// Arc length of the closest centerline point, measured clockwise from the
/// middle of the +Y straight, in [0, centerline_length).
double centerline_progress(const TrackSpec& spec, double x, double y);

/// Analytic cost profile: 0 inside the band, linear ramp, then 1.
double analytic_track_cost(const TrackSpec& spec, double x, double y);

/// Sampled cost field. Cell (i, j) is centered at
/// (origin_x + i * resolution, origin_y + j * resolution).
struct Costmap {
  double resolution = 0.05;
  double origin_x = 0.0;
  double origin_y = 0.0;
  int width = 0;   // cells along X
  int height = 0;  // cells along Y
  std::vector<double> cells;  // row-major: j * width + i

  [[nodiscard]] double at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i]; }
};

/// Samples analytic_track_cost over a grid covering the track plus margin.
/// Requires 0 < resolution <= ramp_width / 4.
Costmap build_oval_costmap(const TrackSpec& spec, double resolution, double margin = 0.5);

/// Bilinear interpolation over the four surrounding cell centers; 1 outside
/// the grid.
double track_cost(const Costmap& map, double x, double y);

/// Writes a binary PGM (white = 0, black = 1) and a JSON sidecar with the
/// resolution and origin next to it (`<path>.json`).
void export_costmap_pgm(const Costmap& map, const std::filesystem::path& path);

}  // namespace cmaml::track
