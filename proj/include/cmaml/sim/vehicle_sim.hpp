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

#include <random>
#include <utility>

#include "cmaml/model/types.hpp"
#include "cmaml/sim/surface_map.hpp"

namespace cmaml::sim {

/// Plant parameters of the simulated one-tenth scale car. Defaults are
/// illustrative values for a ~2 kg car, not measurements of a real vehicle.
struct SimConfig {
  double mass = 2.0;                 // [kg]
  double yaw_inertia = 0.035;        // [kg m^2]
  double front_axle = 0.13;          // CG to front axle [m]
  double rear_axle = 0.13;           // CG to rear axle [m]
  double front_stiffness_per_mu = 60.0;   // cornering stiffness / mu [N/rad]
  double rear_stiffness_per_mu = 180.0;
  double gravity = 9.81;
  double max_steer = 0.35;           // steering angle at |u1| = 1 [rad]
  double max_accel = 4.0;            // acceleration at |u2| = 1 [m/s^2]
  double rolling_drag = 0.3;         // linear speed damping [1/s]
  double steer_tau = 0.05;           // steering first-order lag [s]
  double roll_gain = 0.01;           // steady roll per lateral acceleration [rad/(m/s^2)]
  double roll_tau = 0.1;             // roll first-order lag [s]
  double low_speed = 0.5;            // floor on vx inside slip-angle computation [m/s]
  double dt_sim = 0.001;             // internal integration step [s]

  // Observation noise standard deviations.
  double noise_phi = 0.002;
  double noise_vx = 0.01;
  double noise_vy = 0.01;
  double noise_r = 0.02;
  double noise_x = 0.001;
  double noise_y = 0.001;
  double noise_psi = 0.003;

  [[nodiscard]] double wheelbase() const { return front_axle + rear_axle; }
  /// Throws std::invalid_argument if a constant is non-positive or dt_sim
  /// does not divide `control_dt`.
  void validate(double control_dt = model::kControlPeriod) const;
};

struct SimState {
  model::Pose pose;
  model::VehicleState state;
  double steer = 0.0;  // actual (lagged) steering angle [rad]
};

/// Fiala brush-tire lateral force for slip angle `alpha`; saturates at
/// mu * normal_load beyond the full-slide angle.
double fiala_lateral_force(double alpha, double stiffness, double mu, double normal_load);

/// Advances the plant by one control period under a held command.
/// Throws model::DivergenceError on a non-finite state.
SimState sim_step(const SimState& sim, const SimConfig& cfg, const SurfaceMap& map,
                  const model::ControlInput& command, double dt);

/// Noisy measurement of the true state; zero stddev returns the exact state.
/// Draws exactly seven standard normals per call, in the order
/// phi, vx, vy, r, x, y, psi.
std::pair<model::VehicleState, model::Pose> observe(const SimState& sim, const SimConfig& cfg,
                                                    std::mt19937_64& rng);

/// Lateral acceleration felt by the body (tire forces / mass) at this state.
double lateral_acceleration(const SimState& sim, const SimConfig& cfg, const SurfaceMap& map);

/// Front and rear slip angles at this state.
std::pair<double, double> slip_angles(const SimState& sim, const SimConfig& cfg);

}  // namespace cmaml::sim
