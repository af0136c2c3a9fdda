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

#include <string>
#include <vector>

namespace cmaml::sim {

inline constexpr int kCement = 0;
inline constexpr int kRubber = 1;
inline constexpr int kFoam = 2;

/// Closed half-plane nx * X + ny * Y <= offset.
struct HalfPlane {
  double nx = 0.0;
  double ny = 0.0;
  double offset = 0.0;
  [[nodiscard]] bool contains(double x, double y) const { return nx * x + ny * y <= offset; }
};

/// Convex region: intersection of closed half-planes.
struct Region {
  int id = kCement;
  std::string name;
  double mu = 0.9;
  std::vector<HalfPlane> bounds;

  [[nodiscard]] bool contains(double x, double y) const;
  static Region rectangle(int id, std::string name, double mu, double x_min, double x_max, double y_min,
                          double y_max);
};

struct SurfaceInfo {
  int id = kCement;
  double mu = 0.9;
};

/// Friction regions; the first region containing a point wins, and points
/// outside every region get the default (cement) surface.
struct SurfaceMap {
  std::vector<Region> regions;
  int default_id = kCement;
  std::string default_name = "cement";
  double default_mu = 0.9;

  /// Cement everywhere.
  static SurfaceMap uniform(double mu = 0.9);
  /// Rubber for X >= split_x, foam for X <= split_x inside |X|, |Y| <= extent.
  /// On the split line rubber wins (listed first).
  static SurfaceMap two_surface(double split_x = 0.0, double extent = 6.0, double rubber_mu = 1.2,
                                double foam_mu = 0.6, double cement_mu = 0.9);
};

SurfaceInfo surface_at(const SurfaceMap& map, double x, double y);

}  // namespace cmaml::sim
