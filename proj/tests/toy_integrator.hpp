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

// 1-D double integrator driven through the generic MPPI update: u1 is the
// acceleration command (scaled by kToyAccel), u2 is ignored.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cmaml/control/mppi.hpp"

namespace cmaml::testing {

inline constexpr double kToyAccel = 2.0;         // [m/s^2] per unit command
inline constexpr double kToyPositionWeight = 10.0;

inline control::MppiConfig toy_config() {
  control::MppiConfig cfg;
  cfg.samples = 256;
  cfg.temperature = 10.0;
  cfg.sigma_steer = 0.5;
  cfg.sigma_accel = 0.1;
  return cfg;
}

inline std::vector<double> toy_costs(const control::ControlSequence& seq, const control::Perturbations& noise,
                                     const control::MppiConfig& cfg, double x0, double v0, double target) {
  std::vector<double> costs(static_cast<std::size_t>(noise.cols()));
  for (Eigen::Index k = 0; k < noise.cols(); ++k) {
    double x = x0, v = v0, total = 0.0;
    for (std::size_t h = 0; h < seq.size(); ++h) {
      const double u = std::clamp(seq[h].u1 + noise(static_cast<Eigen::Index>(2 * h), k), -1.0, 1.0);
      x += v * cfg.dt;
      v += kToyAccel * u * cfg.dt;
      total += kToyPositionWeight * (x - target) * (x - target);
    }
    costs[static_cast<std::size_t>(k)] = total;
  }
  return costs;
}

struct ToyResult {
  int first_within_5pct = -1;  // step index, -1 if never
  double final_position = 0.0;
};

inline ToyResult run_toy_integrator(double target, int steps, std::uint64_t seed) {
  const control::MppiConfig cfg = toy_config();
  std::mt19937_64 rng(seed);
  control::ControlSequence seq = control::zero_sequence(cfg);
  double x = 0.0, v = 0.0;
  ToyResult out;
  for (int t = 1; t <= steps; ++t) {
    const auto res = control::mppi_update(seq, cfg, rng, [&](const control::ControlSequence& s,
                                                            const control::Perturbations& n) {
      return toy_costs(s, n, cfg, x, v, target);
    });
    x += v * cfg.dt;
    v += kToyAccel * res.command.u1 * cfg.dt;
    seq = res.next;
    if (out.first_within_5pct < 0 && std::abs(x - target) <= 0.05 * std::abs(target)) out.first_within_5pct = t;
  }
  out.final_position = x;
  return out;
}

}  // namespace cmaml::testing
