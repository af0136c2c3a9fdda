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

#include "cmaml/sim/surface_map.hpp"

#include <algorithm>

namespace cmaml::sim {

bool Region::contains(double x, double y) const {
  return std::all_of(bounds.begin(), bounds.end(), [&](const HalfPlane& h) { return h.contains(x, y); });
}

Region Region::rectangle(int id, std::string name, double mu, double x_min, double x_max, double y_min,
                         double y_max) {
  return {id,
          std::move(name),
          mu,
          {{1.0, 0.0, x_max}, {-1.0, 0.0, -x_min}, {0.0, 1.0, y_max}, {0.0, -1.0, -y_min}}};
}

SurfaceMap SurfaceMap::uniform(double mu) {
  SurfaceMap map;
  map.default_mu = mu;
  return map;
}

SurfaceMap SurfaceMap::two_surface(double split_x, double extent, double rubber_mu, double foam_mu,
                                   double cement_mu) {
  SurfaceMap map = uniform(cement_mu);
  map.regions.push_back(Region::rectangle(kRubber, "rubber", rubber_mu, split_x, extent, -extent, extent));
  map.regions.push_back(Region::rectangle(kFoam, "foam", foam_mu, -extent, split_x, -extent, extent));
  return map;
}

SurfaceInfo surface_at(const SurfaceMap& map, double x, double y) {
  for (const Region& r : map.regions) {
    if (r.contains(x, y)) return {r.id, r.mu};
  }
  return {map.default_id, map.default_mu};
}

}  // namespace cmaml::sim
