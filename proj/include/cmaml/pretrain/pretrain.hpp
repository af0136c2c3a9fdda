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

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cmaml/harness/closed_loop.hpp"
#include "cmaml/model/dynamics.hpp"
#include "cmaml/sim/vehicle_sim.hpp"

namespace cmaml::pretrain {

/// Smoothed random driving: Ornstein-Uhlenbeck steering, a wandering speed
/// target tracked by a proportional throttle, and a steering bias back
/// toward the origin once the car leaves `home_radius`.
struct ExcitationConfig {
  double steer_tau = 0.6;    // OU correlation time [s]
  double steer_sigma = 0.55;  // stationary std of the steering command
  double speed_mean = 2.0;   // [m/s]
  double speed_sigma = 0.9;
  double speed_tau = 2.0;    // [s]
  double speed_min = 0.3;
  double speed_max = 3.6;
  double speed_gain = 1.2;   // throttle per m/s of speed error
  double accel_sigma = 0.25;  // white throttle noise per command
  double home_radius = 3.0;  // [m]
  double home_gain = 1.5;    // steering per rad of heading error
};

struct CollectConfig {
  double duration = 600.0;       // [s]
  double log_period = 0.01;      // simulator logging period [s]
  double command_period = 0.02;  // commands are held this long [s]
  double chunk = 10.0;           // data is accepted or dropped in chunks [s]
  double workspace = 6.0;        // |x|, |y| bound [m]
  double mu = 0.9;               // cement
  ExcitationConfig excitation;
  sim::SimConfig sim;
};

/// Time-contiguous runs of samples sharing one spacing.
struct Dataset {
  std::vector<std::vector<model::Sample>> segments;
  double dt = 0.0;
  int dropped_chunks = 0;

  [[nodiscard]] std::size_t sample_count() const;
};

/// Drives the simulator under the excitation policy on a uniform surface and
/// logs noisy observations. Chunks that leave the workspace or diverge are
/// dropped and the car restarts at the origin.
Dataset collect_data(const CollectConfig& cfg, std::uint64_t seed);

/// Keeps every k-th sample with k = target_dt / dataset.dt. Throws
/// std::invalid_argument when k is not an integer.
Dataset decimate(const Dataset& data, double target_dt);

/// Windows of `length` samples starting every `stride` samples.
std::vector<model::SampleWindow> make_windows(const Dataset& data, std::size_t length, std::size_t stride);

/// Per-channel mean and std of the network inputs over every sample.
nn::InputNormalizer fit_normalizer(const Dataset& data);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double lr = 1e-3;
  double grad_clip = 100.0;
  /// Rollout lengths (in samples) used for the first epochs; the full
  /// window is used afterwards. Empty means no curriculum.
  std::vector<std::size_t> curriculum;
  int curriculum_epochs = 0;  // epochs per curriculum stage
};

struct TrainResult {
  model::DynamicsModel model;
  std::vector<double> curve;  // curve[0] before training, curve[e] after epoch e
};

/// Minimizes the mean rollout loss over shuffled mini-batches with Adam.
/// `progress(epoch, loss)` is called after every epoch when set.
/// Throws model::DivergenceError or std::runtime_error on a non-finite loss.
TrainResult train_offline(const std::vector<model::SampleWindow>& windows, const nn::InputNormalizer& normalizer,
                          const TrainConfig& cfg, std::uint64_t seed,
                          const std::function<void(int, double)>& progress = {});

/// Mean rollout loss over windows (forward only).
double mean_loss(const model::DynamicsModel& m, const std::vector<model::SampleWindow>& windows);

/// Mean distance between predicted and measured position at the last sample.
double mean_terminal_error(const model::DynamicsModel& m, const std::vector<model::SampleWindow>& windows);

struct FinetuneResult {
  model::DynamicsModel model;  // settled fast parameters
  int laps = 0;
  double max_track_cost = 0.0;  // over the scored laps
  double mean_window_loss = 0.0;  // pre-update loss over the run's adaptation ticks
};

/// Closed-loop MPPI laps on the cement-only oval with gradient-descent
/// adaptation; returns the parameters reached at the end. Throws
/// std::runtime_error if the run aborts.
FinetuneResult finetune_on_track(const model::DynamicsModel& pretrained, const control::MppiConfig& mppi,
                                 const sim::SimConfig& sim, const harness::Scenario& scenario, int laps,
                                 const adapt::AdaptConfig& adapt, std::uint64_t seed);

}  // namespace cmaml::pretrain
