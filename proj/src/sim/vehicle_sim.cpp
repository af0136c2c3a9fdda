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

#include "cmaml/sim/vehicle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cmaml::sim {

void SimConfig::validate(double control_dt) const {
  const double positives[] = {mass,      yaw_inertia, front_axle, rear_axle, front_stiffness_per_mu,
                              rear_stiffness_per_mu, gravity, max_steer, max_accel, steer_tau,
                              roll_tau,  low_speed,   dt_sim};
  for (double v : positives) {
    if (!(v > 0.0)) throw std::invalid_argument("SimConfig: physical constants must be positive");
  }
  if (rolling_drag < 0.0 || roll_gain < 0.0) throw std::invalid_argument("SimConfig: negative drag or roll gain");
  if (dt_sim > 0.002) throw std::invalid_argument("SimConfig: dt_sim must be <= 0.002 s");
  const double ratio = control_dt / dt_sim;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("SimConfig: dt_sim must divide the control period");
  }
  const double noise[] = {noise_phi, noise_vx, noise_vy, noise_r, noise_x, noise_y, noise_psi};
  for (double v : noise) {
    if (v < 0.0) throw std::invalid_argument("SimConfig: noise std must be non-negative");
  }
}

double fiala_lateral_force(double alpha, double stiffness, double mu, double normal_load) {
  if (!(mu > 0.0) || !(normal_load > 0.0)) return 0.0;
  const double limit = mu * normal_load;
  const double tan_slide = 3.0 * limit / stiffness;
  if (std::abs(alpha) >= std::atan(tan_slide)) return alpha > 0.0 ? -limit : limit;
  const double t = std::tan(alpha);
  return -stiffness * t + stiffness * stiffness / (3.0 * limit) * std::abs(t) * t -
         stiffness * stiffness * stiffness / (27.0 * limit * limit) * t * t * t;
}

namespace {

struct TireForces {
  double front = 0.0;
  double rear = 0.0;
};

std::pair<double, double> slip(const model::VehicleState& s, double steer, const SimConfig& cfg) {
  const double vx = std::max(s.vx, cfg.low_speed);
  const double front = std::atan2(s.vy + cfg.front_axle * s.r, vx) - steer;
  const double rear = std::atan2(s.vy - cfg.rear_axle * s.r, vx);
  return {front, rear};
}

TireForces tire_forces(const model::VehicleState& s, double steer, double mu, const SimConfig& cfg) {
  const auto [alpha_f, alpha_r] = slip(s, steer, cfg);
  const double weight = cfg.mass * cfg.gravity;
  const double load_f = weight * cfg.rear_axle / cfg.wheelbase();
  const double load_r = weight * cfg.front_axle / cfg.wheelbase();
  return {fiala_lateral_force(alpha_f, cfg.front_stiffness_per_mu * mu, mu, load_f),
          fiala_lateral_force(alpha_r, cfg.rear_stiffness_per_mu * mu, mu, load_r)};
}

}  // namespace

std::pair<double, double> slip_angles(const SimState& sim, const SimConfig& cfg) {
  return slip(sim.state, sim.steer, cfg);
}

double lateral_acceleration(const SimState& sim, const SimConfig& cfg, const SurfaceMap& map) {
  const double mu = surface_at(map, sim.pose.x, sim.pose.y).mu;
  const TireForces f = tire_forces(sim.state, sim.steer, mu, cfg);
  return (f.front * std::cos(sim.steer) + f.rear) / cfg.mass;
}

SimState sim_step(const SimState& sim, const SimConfig& cfg, const SurfaceMap& map,
                  const model::ControlInput& command, double dt) {
  const double ratio = dt / cfg.dt_sim;
  const int substeps = static_cast<int>(std::lround(ratio));
  if (substeps < 1 || std::abs(ratio - substeps) > 1e-9) {
    throw std::invalid_argument("sim_step: dt_sim must divide the control period");
  }
  const model::ControlInput u = command.clamped();
  const double h = cfg.dt_sim;
  const double steer_blend = 1.0 - std::exp(-h / cfg.steer_tau);
  const double roll_blend = 1.0 - std::exp(-h / cfg.roll_tau);
  const double steer_target = u.u1 * cfg.max_steer;

  SimState next = sim;
  model::VehicleState& s = next.state;
  model::Pose& p = next.pose;
  for (int k = 0; k < substeps; ++k) {
    next.steer += (steer_target - next.steer) * steer_blend;
    const double mu = surface_at(map, p.x, p.y).mu;
    const TireForces f = tire_forces(s, next.steer, mu, cfg);
    const double cos_d = std::cos(next.steer);
    const double sin_d = std::sin(next.steer);
    const double ay = (f.front * cos_d + f.rear) / cfg.mass;

    // Traction ellipse: longitudinal drive/brake gets what the lateral
    // demand leaves of mu * g.
    const double grip = mu * cfg.gravity;
    const double ax_budget = std::sqrt(std::max(grip * grip - ay * ay, 0.0));
    const double ax = std::clamp(u.u2 * cfg.max_accel, -ax_budget, ax_budget) - cfg.rolling_drag * s.vx;

    const double dvx = ax - f.front * sin_d / cfg.mass;
    const double dr = (cfg.front_axle * f.front * cos_d - cfg.rear_axle * f.rear) / cfg.yaw_inertia;

    // Pose from the velocities at the start of the substep.
    const double c = std::cos(p.psi);
    const double sn = std::sin(p.psi);
    p.x += (s.vx * c - s.vy * sn) * h;
    p.y += (s.vx * sn + s.vy * c) * h;
    p.psi += s.r * h;

    // Body-frame velocity: force increment, then the exact rotation of the
    // frame by r * h (the vy * r / -vx * r transport terms).
    double vx = s.vx + dvx * h;
    double vy = s.vy + ay * h;
    const double turn = s.r * h;
    const double ct = std::cos(turn);
    const double st = std::sin(turn);
    s.vx = vx * ct + vy * st;
    s.vy = -vx * st + vy * ct;
    s.r += dr * h;
    s.phi += (cfg.roll_gain * ay - s.phi) * roll_blend;
    s.vx = std::max(s.vx, 0.0);

    if (!s.finite() || !p.finite() || !std::isfinite(next.steer)) {
      std::ostringstream msg;
      msg << "simulation diverged at (" << p.x << ", " << p.y << ")";
      throw model::DivergenceError(msg.str(), s);
    }
  }
  return next;
}

std::pair<model::VehicleState, model::Pose> observe(const SimState& sim, const SimConfig& cfg,
                                                    std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  model::VehicleState s = sim.state;
  model::Pose p = sim.pose;
  s.phi += cfg.noise_phi * gauss(rng);
  s.vx += cfg.noise_vx * gauss(rng);
  s.vy += cfg.noise_vy * gauss(rng);
  s.r += cfg.noise_r * gauss(rng);
  p.x += cfg.noise_x * gauss(rng);
  p.y += cfg.noise_y * gauss(rng);
  p.psi += cfg.noise_psi * gauss(rng);
  return {s, p};
}

}  // namespace cmaml::sim
