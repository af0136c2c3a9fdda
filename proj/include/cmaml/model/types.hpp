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

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmaml::model {

/// Body-frame dynamic state.
struct VehicleState {
  double phi = 0.0;  // roll angle [rad]
  double vx = 0.0;   // longitudinal velocity [m/s]
  double vy = 0.0;   // lateral velocity [m/s]
  double r = 0.0;    // yaw rate [rad/s]

  [[nodiscard]] bool finite() const {
    return std::isfinite(phi) && std::isfinite(vx) && std::isfinite(vy) && std::isfinite(r);
  }
  bool operator==(const VehicleState&) const = default;
};

/// World pose. psi is kept unwrapped.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(psi); }
  bool operator==(const Pose&) const = default;
};

/// Normalized steering (u1) and acceleration (u2) command.
struct ControlInput {
  double u1 = 0.0;
  double u2 = 0.0;

  [[nodiscard]] ControlInput clamped() const {
    return {std::clamp(u1, -1.0, 1.0), std::clamp(u2, -1.0, 1.0)};
  }
  bool operator==(const ControlInput&) const = default;
};

inline constexpr double kControlPeriod = 0.02;

/// One measured tuple. `input` is the command applied from `time` until the
/// next sample.
struct Sample {
  double time = 0.0;
  VehicleState state;
  Pose pose;
  ControlInput input;
  int surface = 0;
};

/// N consecutive samples spaced exactly dt apart.
struct SampleWindow {
  std::vector<Sample> samples;
  double dt = kControlPeriod;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  /// True when there are at least two samples and timestamps advance by dt
  /// (to 1e-9 s).
  [[nodiscard]] bool valid() const;
};

/// Raised when the learned model or the simulator produces a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, VehicleState offending)
      : std::runtime_error(what), state_(offending) {}
  [[nodiscard]] const VehicleState& state() const { return state_; }

 private:
  VehicleState state_;
};

}  // namespace cmaml::model
