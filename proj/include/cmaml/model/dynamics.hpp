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

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cmaml/model/types.hpp"
#include "cmaml/nn/checkpoint.hpp"
#include "cmaml/nn/mlp.hpp"

namespace cmaml::model {

/// Learned discrete-time vehicle model: x(t+1) = x(t) + f(norm([x; u])) * dt.
struct DynamicsModel {
  nn::MlpParams params{nn::kDynamicsShape};
  nn::InputNormalizer normalizer = nn::InputNormalizer::identity(nn::kDynamicsShape.input);

  static DynamicsModel from_checkpoint(const nn::Checkpoint& ckpt);
  [[nodiscard]] nn::Checkpoint to_checkpoint() const { return {params, normalizer}; }
  /// Same normalizer, different parameters.
  [[nodiscard]] DynamicsModel with_params(nn::MlpParams p) const { return {std::move(p), normalizer}; }
};

/// Network input [phi, vx, vy, r, u1, u2] with the command clamped to [-1, 1].
nn::Vector network_input(const VehicleState& s, const ControlInput& u);

/// Explicit Euler step of the learned model. Throws DivergenceError on a
/// non-finite result.
VehicleState step(const DynamicsModel& model, const VehicleState& s, const ControlInput& u, double dt);

/// Kinematic pose update using the pre-update heading.
Pose propagate_pose(const Pose& p, const VehicleState& s, double dt);

struct RolloutPoint {
  VehicleState state;
  Pose pose;
};

/// Propagates (state, pose) once per input. Element k is the prediction
/// after applying inputs[0..k].
std::vector<RolloutPoint> rollout(const DynamicsModel& model, const VehicleState& s0, const Pose& p0,
                                  std::span<const ControlInput> inputs, double dt);

/// Squared error of X, Y, phi and psi summed over samples 1..N-1 of a rollout
/// seeded from the window's first sample and driven by its recorded inputs.
double rollout_loss(const DynamicsModel& model, const SampleWindow& window);

struct LossAndGradient {
  double loss = 0.0;
  nn::Gradient grad;
};

/// rollout_loss and its exact parameter gradient (backpropagation through
/// the state recurrence).
LossAndGradient window_loss_and_grad(const DynamicsModel& model, const SampleWindow& window);

/// Mean loss and mean gradient over several windows, reduced in order.
LossAndGradient batch_loss_and_grad(const DynamicsModel& model, std::span<const SampleWindow* const> windows);

}  // namespace cmaml::model
