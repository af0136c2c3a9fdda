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

#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cmaml/model/dynamics.hpp"
#include "cmaml/model/types.hpp"
#include "cmaml/track/costmap.hpp"

namespace cmaml::control {

struct MppiConfig {
  int samples = 512;          // K
  int horizon = 100;          // H
  double temperature = 50.0;  // lambda
  double sigma_steer = 0.15;  // std of u1 perturbations
  double sigma_accel = 0.20;  // std of u2 perturbations
  double track_weight = 600.0;
  double speed_weight = 25.0;
  double v_ref = 3.2;  // [m/s]
  double dt = model::kControlPeriod;
  /// Keep the stored sequence inside the command box after each update.
  bool clamp_sequence = true;

  /// Throws std::invalid_argument unless K >= 2, lambda > 0, sigmas > 0 and
  /// horizon * dt spans 2 s.
  void validate() const;
};

using ControlSequence = std::vector<model::ControlInput>;

ControlSequence zero_sequence(const MppiConfig& cfg);

/// Running cost of one predicted point.
double stage_cost(const model::VehicleState& s, const model::Pose& p, const track::Costmap& costmap,
                  const MppiConfig& cfg);

/// exp(-(S_i - min S) / lambda), normalized. Non-finite costs get weight 0.
/// Throws std::invalid_argument on an empty vector, lambda <= 0, or when no
/// cost is finite.
std::vector<double> softmin_weights(std::span<const double> costs, double lambda);

/// Perturbations, one column per sample. Rows 2h and 2h+1 hold the u1 and u2
/// noise of step h.
using Perturbations = Eigen::MatrixXd;

/// Draws K columns of Gaussian noise in sample-major order.
Perturbations sample_perturbations(const MppiConfig& cfg, std::mt19937_64& rng);

/// prev + sum_i w_i * noise_i, reduced over samples in index order.
ControlSequence weighted_update(const ControlSequence& prev, const Perturbations& noise,
                                std::span<const double> weights);

/// Scores every perturbed copy of `prev`; returns one cost per column of
/// `noise` (+inf for a diverged rollout).
using SequenceScorer = std::function<std::vector<double>(const ControlSequence& prev, const Perturbations& noise)>;

struct MppiTelemetry {
  double min_cost = 0.0;
  double mean_cost = 0.0;  // over finite costs
  double effective_samples = 0.0;  // 1 / sum w^2
  int diverged = 0;
  model::ControlInput command;
};

struct MppiResult {
  model::ControlInput command;  // first entry of `optimized`, clamped
  ControlSequence optimized;    // before the shift
  ControlSequence next;         // warm start for the next call
  MppiTelemetry telemetry;
};

/// Raised when every sampled rollout diverges.
class MppiDivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One sampling iteration over an arbitrary scorer.
MppiResult mppi_update(const ControlSequence& prev, const MppiConfig& cfg, std::mt19937_64& rng,
                       const SequenceScorer& score);

/// Single-precision copy of a dynamics model with the input normalization
/// folded into the first layer, used for batched rollouts.
class BatchRollout {
 public:
  explicit BatchRollout(const model::DynamicsModel& model);

  /// Total cost of each perturbed sequence rolled out from (s, p). Commands
  /// are clamped before they reach the network.
  std::vector<double> score(const model::VehicleState& s, const model::Pose& p, const ControlSequence& prev,
                            const Perturbations& noise, const track::Costmap& costmap,
                            const MppiConfig& cfg);

 private:
  Eigen::MatrixXf w1_, w2_, w3_;
  Eigen::VectorXf b1_, b2_, b3_;
  // scratch, reused between calls
  Eigen::MatrixXf x_, h1_, h2_, out_;
  Eigen::ArrayXf px_, py_, psi_, c_, sn_;
};

/// Learned-model MPPI step from the measured state and pose.
MppiResult mppi_step(const model::DynamicsModel& model, const model::VehicleState& s, const model::Pose& p,
                     const ControlSequence& prev, const track::Costmap& costmap, const MppiConfig& cfg,
                     std::mt19937_64& rng);

/// Same as above with a caller-owned rollout engine, avoiding the per-call
/// conversion of the parameters.
MppiResult mppi_step(BatchRollout& engine, const model::VehicleState& s, const model::Pose& p,
                     const ControlSequence& prev, const track::Costmap& costmap, const MppiConfig& cfg,
                     std::mt19937_64& rng);

}  // namespace cmaml::control
