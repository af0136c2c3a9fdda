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
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cmaml/model/dynamics.hpp"
#include "cmaml/nn/hvp.hpp"
#include "cmaml/nn/optim.hpp"

namespace cmaml::adapt {

enum class AdaptMode { kFixed, kGd, kCmaml };
enum class MetaGradientMode { kExactHvp, kFirstOrder };

std::string_view to_string(AdaptMode mode);
std::string_view to_string(MetaGradientMode mode);
/// Accepts "fixed", "gd", "cmaml". Throws std::invalid_argument otherwise.
AdaptMode parse_adapt_mode(std::string_view name);
/// Accepts "exact-hvp", "first-order".
MetaGradientMode parse_meta_gradient_mode(std::string_view name);

struct AdaptConfig {
  AdaptMode mode = AdaptMode::kCmaml;
  double update_period = 0.08;  // T_up [s]
  int window = 14;              // N_c samples
  double fast_lr = 0.1;         // eta
  double meta_lr = 1e-4;        // l_r (Adam)
  int train_capacity = 1;
  int test_capacity = 1;
  double meta_period = 0.4;  // periodic meta update [s]
  MetaGradientMode meta_gradient = MetaGradientMode::kExactHvp;
  /// Probability that a full buffer pair is left untouched by an insert; the
  /// rest is split evenly between replacing train and replacing test.
  double keep_probability = 0.5;
  double grad_clip = 10.0;  // norm cap before any parameter step
  double hvp_eps = 1e-4;
  double control_period = model::kControlPeriod;

  /// Throws std::invalid_argument when periods are not integer multiples,
  /// capacities are not 1, or rates are not positive.
  void validate() const;
  [[nodiscard]] int steps_per_update() const;  // control steps per T_up
  [[nodiscard]] int updates_per_meta() const;  // T_up ticks per meta period
};

struct AdaptState {
  model::DynamicsModel meta;  // theta
  model::DynamicsModel fast;  // theta tilde
  std::optional<model::SampleWindow> train;
  std::optional<model::SampleWindow> test;
  nn::AdamState adam;
  int updates_since_meta = 0;
  std::mt19937_64 rng;

  /// Parameters the controller should use for this mode.
  [[nodiscard]] const model::DynamicsModel& active(const AdaptConfig& cfg) const {
    return cfg.mode == AdaptMode::kFixed ? meta : fast;
  }
};

AdaptState make_adapt_state(const model::DynamicsModel& initial, std::uint64_t seed);

struct AdaptEvent {
  double time = 0.0;  // timestamp of the window's last sample
  AdaptMode mode = AdaptMode::kFixed;
  std::string event;  // fine_tune, meta_periodic, meta_boundary, reset, skipped
  double loss_before = 0.0;
  double loss_after = 0.0;
  double grad_norm = 0.0;  // before clipping
};

struct AdaptStep {
  AdaptState state;
  std::vector<AdaptEvent> events;
};

/// One T_up tick of the update policy for cfg.mode.
AdaptStep on_sample(const AdaptState& a, const model::SampleWindow& window, bool boundary, const AdaptConfig& cfg);

/// Scales `grad` down to `max_norm` if needed and returns the factor applied.
double clip_factor(const nn::Vector& grad, double max_norm);

/// theta - eta * grad L(theta; train), with the gradient clipped to
/// `max_norm`.
nn::MlpParams fast_adapt(const model::DynamicsModel& m, const model::SampleWindow& train, double eta,
                         double max_norm = 10.0, double* grad_norm = nullptr);

/// One SGD step from the previous fast parameters on the current window.
nn::MlpParams fine_tune(const model::DynamicsModel& fast, const model::SampleWindow& window, double eta,
                        double max_norm = 10.0, double* grad_norm = nullptr);

/// Gradient of L_test(theta - eta * c * g_train(theta)) with respect to theta,
/// where c is the clip factor of the inner gradient (held constant).
/// Exact mode: (I - eta * c * H_train) g_test(theta'), with the Hessian-vector
/// product from central differences of train gradients.
/// First-order mode: g_test(theta').
struct MetaGradient {
  nn::Vector grad;
  double test_loss = 0.0;  // at theta'
  double inner_grad_norm = 0.0;
};
MetaGradient meta_gradient(const nn::Vector& theta, const nn::LossGradFn& train, const nn::LossGradFn& test,
                           double eta, MetaGradientMode mode, double max_norm, double hvp_eps);

struct MetaUpdateResult {
  nn::MlpParams params;
  nn::AdamState adam;
  double grad_norm = 0.0;  // meta-gradient norm before clipping
};

/// Meta gradient on (train, test) followed by one Adam step with cfg.meta_lr.
MetaUpdateResult meta_update(const model::DynamicsModel& meta, const model::SampleWindow& train,
                             const model::SampleWindow& test, const nn::AdamState& adam, const AdaptConfig& cfg);

/// Fills the empty buffer (train first); with both full, keeps both with
/// cfg.keep_probability, else replaces train or test with equal odds.
void buffer_insert(AdaptState& a, const model::SampleWindow& window, const AdaptConfig& cfg);

/// CSV: time,mode,event,loss_before,loss_after,grad_norm
void write_adapt_log_header(std::ostream& out);
void write_adapt_log(std::ostream& out, const std::vector<AdaptEvent>& events);

}  // namespace cmaml::adapt
