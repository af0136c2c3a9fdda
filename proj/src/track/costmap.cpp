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

#include "cmaml/track/costmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace cmaml::track {

void TrackSpec::validate() const {
  if (!(straight_length > 0.0) || !(radius > 0.0) || !(half_width > 0.0) || !(ramp_width > 0.0)) {
    throw std::invalid_argument("TrackSpec: lengths and widths must be positive");
  }
}

double TrackSpec::centerline_length() const { return 2.0 * straight_length + 2.0 * std::numbers::pi * radius; }

namespace {

struct Local {
  double u;
  double v;
};

Local to_track_frame(const TrackSpec& spec, double x, double y) {
  const double dx = x - spec.center_x;
  const double dy = y - spec.center_y;
  const double c = std::cos(spec.heading);
  const double s = std::sin(spec.heading);
  return {c * dx + s * dy, -s * dx + c * dy};
}

}  // namespace

double centerline_distance(const TrackSpec& spec, double x, double y) {
  const Local p = to_track_frame(spec, x, y);
  const double half = 0.5 * spec.straight_length;
  if (std::abs(p.u) <= half) return std::abs(std::abs(p.v) - spec.radius);
  const double cu = p.u > 0.0 ? half : -half;
  return std::abs(std::hypot(p.u - cu, p.v) - spec.radius);
}

double centerline_progress(const TrackSpec& spec, double x, double y) {
  const Local p = to_track_frame(spec, x, y);
  const double half = 0.5 * spec.straight_length;
  const double arc = std::numbers::pi * spec.radius;
  double s = 0.0;
  if (std::abs(p.u) <= half) {
    // Clockwise: +X along the top straight, -X along the bottom one.
    s = p.v >= 0.0 ? p.u : half + arc + (half - p.u);
    if (p.v >= 0.0 && p.u < 0.0) s += spec.centerline_length();
  } else if (p.u > half) {
    // Right arc, swept clockwise from the top (angle pi/2) to the bottom.
    const double angle = std::atan2(p.v, p.u - half);
    s = half + (std::numbers::pi / 2 - angle) * spec.radius;
  } else {
    // Left arc, from the bottom (angle -pi/2) through pi to the top.
    double angle = std::atan2(p.v, p.u + half);
    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
    s = half + arc + spec.straight_length + (1.5 * std::numbers::pi - angle) * spec.radius;
  }
  s = std::fmod(s, spec.centerline_length());
  return s < 0.0 ? s + spec.centerline_length() : s;
}

double analytic_track_cost(const TrackSpec& spec, double x, double y) {
  const double d = centerline_distance(spec, x, y);
  if (d <= spec.half_width) return 0.0;
  if (d >= spec.half_width + spec.ramp_width) return 1.0;
  return (d - spec.half_width) / spec.ramp_width;
}

Costmap build_oval_costmap(const TrackSpec& spec, double resolution, double margin) {
  spec.validate();
  if (!(resolution > 0.0) || resolution > spec.ramp_width / 4.0) {
    throw std::invalid_argument("build_oval_costmap: resolution must be in (0, ramp_width / 4]");
  }
  // Axis-aligned bounds of the rotated oval plus band and margin.
  const double reach_u = 0.5 * spec.straight_length + spec.radius;
  const double reach_v = spec.radius;
  const double c = std::abs(std::cos(spec.heading));
  const double s = std::abs(std::sin(spec.heading));
  const double pad = spec.half_width + spec.ramp_width + margin;
  const double ext_x = c * reach_u + s * reach_v + pad;
  const double ext_y = s * reach_u + c * reach_v + pad;

  Costmap map;
  map.resolution = resolution;
  map.width = static_cast<int>(std::ceil(2.0 * ext_x / resolution)) + 1;
  map.height = static_cast<int>(std::ceil(2.0 * ext_y / resolution)) + 1;
  map.origin_x = spec.center_x - 0.5 * (map.width - 1) * resolution;
  map.origin_y = spec.center_y - 0.5 * (map.height - 1) * resolution;
  map.cells.resize(static_cast<std::size_t>(map.width) * map.height);
  for (int j = 0; j < map.height; ++j) {
    for (int i = 0; i < map.width; ++i) {
      map.cells[static_cast<std::size_t>(j) * map.width + i] =
          analytic_track_cost(spec, map.origin_x + i * resolution, map.origin_y + j * resolution);
    }
  }
  return map;
}

double track_cost(const Costmap& map, double x, double y) {
  constexpr double kEdgeSlack = 1e-9;  // cells
  double fx = (x - map.origin_x) / map.resolution;
  double fy = (y - map.origin_y) / map.resolution;
  if (!(fx >= -kEdgeSlack) || !(fy >= -kEdgeSlack) || fx > map.width - 1 + kEdgeSlack ||
      fy > map.height - 1 + kEdgeSlack) {
    return 1.0;
  }
  fx = std::clamp(fx, 0.0, static_cast<double>(map.width - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(map.height - 1));
  int i = static_cast<int>(fx);
  int j = static_cast<int>(fy);
  i = std::min(i, map.width - 2);
  j = std::min(j, map.height - 2);
  const double tx = fx - i;
  const double ty = fy - j;
  const double c00 = map.at(i, j);
  const double c10 = map.at(i + 1, j);
  const double c01 = map.at(i, j + 1);
  const double c11 = map.at(i + 1, j + 1);
  return (1.0 - ty) * ((1.0 - tx) * c00 + tx * c10) + ty * ((1.0 - tx) * c01 + tx * c11);
}

void export_costmap_pgm(const Costmap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write costmap image: " + path.string());
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  // PGM rows run top to bottom; grid rows run along +Y.
  for (int j = map.height - 1; j >= 0; --j) {
    for (int i = 0; i < map.width; ++i) {
      const double v = std::clamp(map.at(i, j), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - v)))));
    }
  }
  nlohmann::json meta = {{"resolution", map.resolution},
                         {"origin_x", map.origin_x},
                         {"origin_y", map.origin_y},
                         {"width", map.width},
                         {"height", map.height},
                         {"image", path.filename().string()},
                         {"encoding", "P5 grayscale, 255 = cost 0, 0 = cost 1, first row is max Y"}};
  std::ofstream side(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace cmaml::track
