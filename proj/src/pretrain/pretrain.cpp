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

#include "cmaml/pretrain/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "cmaml/nn/optim.hpp"

namespace cmaml::pretrain {

using model::ControlInput;
using model::Sample;
using model::SampleWindow;

std::size_t Dataset::sample_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.size();
  return n;
}

namespace {

int integer_ratio(double num, double den) {
  const double ratio = num / den;
  const long k = std::lround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9) return -1;
  return static_cast<int>(k);
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

class Excitation {
 public:
  Excitation(const ExcitationConfig& cfg, double dt, std::mt19937_64& rng) : cfg_(cfg), dt_(dt), rng_(rng) {
    speed_target_ = cfg.speed_mean;
  }

  void reset() {
    steer_ = 0.0;
    speed_target_ = cfg_.speed_mean;
  }

  ControlInput next(const model::VehicleState& s, const model::Pose& p) {
    // Exact OU discretization for both processes.
    const double as = std::exp(-dt_ / cfg_.steer_tau);
    steer_ = as * steer_ + cfg_.steer_sigma * std::sqrt(1.0 - as * as) * gauss_(rng_);
    const double av = std::exp(-dt_ / cfg_.speed_tau);
    speed_target_ = cfg_.speed_mean + av * (speed_target_ - cfg_.speed_mean) +
                    cfg_.speed_sigma * std::sqrt(1.0 - av * av) * gauss_(rng_);
    const double target = std::clamp(speed_target_, cfg_.speed_min, cfg_.speed_max);

    double u1 = steer_;
    if (std::hypot(p.x, p.y) > cfg_.home_radius) {
      const double err = wrap_angle(std::atan2(-p.y, -p.x) - p.psi);
      u1 += cfg_.home_gain * err;
    }
    const double u2 = cfg_.speed_gain * (target - s.vx) + cfg_.accel_sigma * gauss_(rng_);
    return ControlInput{u1, u2}.clamped();
  }

 private:
  ExcitationConfig cfg_;
  double dt_;
  std::mt19937_64& rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  double steer_ = 0.0;
  double speed_target_ = 0.0;
};

}  // namespace

Dataset collect_data(const CollectConfig& cfg, std::uint64_t seed) {
  if (!(cfg.duration >= 0.0)) throw std::invalid_argument("collect_data: duration must be non-negative");
  const int hold = integer_ratio(cfg.command_period, cfg.log_period);
  if (hold < 0) throw std::invalid_argument("collect_data: command period must be a multiple of the log period");
  const int chunk_steps = integer_ratio(cfg.chunk, cfg.log_period);
  if (chunk_steps < 0) throw std::invalid_argument("collect_data: chunk must be a multiple of the log period");
  cfg.sim.validate(cfg.log_period);

  Dataset data;
  data.dt = cfg.log_period;
  const long total_steps = std::lround(cfg.duration / cfg.log_period);
  if (total_steps == 0) return data;

  std::mt19937_64 rng(seed);
  const sim::SurfaceMap map = sim::SurfaceMap::uniform(cfg.mu);
  Excitation policy(cfg.excitation, cfg.command_period, rng);
  sim::SimState car;
  ControlInput cmd;
  std::vector<Sample> current;  // accepted samples of the running segment
  std::vector<Sample> chunk;
  bool restart = false;

  auto close_segment = [&] {
    if (!current.empty()) data.segments.push_back(std::move(current));
    current.clear();
  };

  for (long k = 0; k < total_steps; ++k) {
    if (restart) {
      car = sim::SimState{};
      policy.reset();
      restart = false;
    }
    const auto [state, pose] = sim::observe(car, cfg.sim, rng);
    if (k % hold == 0) cmd = policy.next(state, pose);
    chunk.push_back({static_cast<double>(k) * cfg.log_period, state, pose, cmd, sim::kCement});

    bool bad = false;
    try {
      car = sim::sim_step(car, cfg.sim, map, cmd, cfg.log_period);
      bad = std::abs(car.pose.x) > cfg.workspace || std::abs(car.pose.y) > cfg.workspace;
    } catch (const model::DivergenceError&) {
      bad = true;
    }
    if (bad) {
      ++data.dropped_chunks;
      chunk.clear();
      close_segment();
      restart = true;
      continue;
    }
    if (static_cast<int>(chunk.size()) == chunk_steps) {
      current.insert(current.end(), chunk.begin(), chunk.end());
      chunk.clear();
    }
  }
  // A partial final chunk is kept: it ended without leaving the workspace.
  current.insert(current.end(), chunk.begin(), chunk.end());
  close_segment();
  return data;
}

Dataset decimate(const Dataset& data, double target_dt) {
  const int k = integer_ratio(target_dt, data.dt);
  if (k < 0) {
    throw std::invalid_argument("decimate: target period is not an integer multiple of the source period (ratio " +
                                std::to_string(target_dt / data.dt) + "); resample first");
  }
  Dataset out;
  out.dt = target_dt;
  out.dropped_chunks = data.dropped_chunks;
  for (const auto& seg : data.segments) {
    std::vector<Sample> kept;
    for (std::size_t i = 0; i < seg.size(); i += static_cast<std::size_t>(k)) kept.push_back(seg[i]);
    if (!kept.empty()) out.segments.push_back(std::move(kept));
  }
  return out;
}

std::vector<SampleWindow> make_windows(const Dataset& data, std::size_t length, std::size_t stride) {
  if (length < 2 || stride < 1) throw std::invalid_argument("make_windows: length >= 2 and stride >= 1 required");
  std::vector<SampleWindow> out;
  for (const auto& seg : data.segments) {
    for (std::size_t start = 0; start + length <= seg.size(); start += stride) {
      SampleWindow w;
      w.dt = data.dt;
      w.samples.assign(seg.begin() + static_cast<std::ptrdiff_t>(start),
                       seg.begin() + static_cast<std::ptrdiff_t>(start + length));
      out.push_back(std::move(w));
    }
  }
  return out;
}

nn::InputNormalizer fit_normalizer(const Dataset& data) {
  const std::size_t n = data.sample_count();
  if (n == 0) throw std::invalid_argument("fit_normalizer: empty dataset");
  nn::Matrix inputs(6, static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (const auto& seg : data.segments) {
    for (const Sample& s : seg) inputs.col(col++) = model::network_input(s.state, s.input);
  }
  return nn::InputNormalizer::fit(inputs);
}

double mean_loss(const model::DynamicsModel& m, const std::vector<SampleWindow>& windows) {
  if (windows.empty()) throw std::invalid_argument("mean_loss: no windows");
  double total = 0.0;
  for (const auto& w : windows) total += model::rollout_loss(m, w);
  return total / static_cast<double>(windows.size());
}

double mean_terminal_error(const model::DynamicsModel& m, const std::vector<SampleWindow>& windows) {
  if (windows.empty()) throw std::invalid_argument("mean_terminal_error: no windows");
  double total = 0.0;
  for (const auto& w : windows) {
    std::vector<ControlInput> inputs;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) inputs.push_back(w.samples[i].input);
    const auto pred = model::rollout(m, w.samples.front().state, w.samples.front().pose, inputs, w.dt);
    const auto& last = w.samples.back().pose;
    total += std::hypot(pred.back().pose.x - last.x, pred.back().pose.y - last.y);
  }
  return total / static_cast<double>(windows.size());
}

TrainResult train_offline(const std::vector<SampleWindow>& windows, const nn::InputNormalizer& normalizer,
                          const TrainConfig& cfg, std::uint64_t seed,
                          const std::function<void(int, double)>& progress) {
  if (windows.empty()) throw std::invalid_argument("train_offline: empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.lr > 0.0)) throw std::invalid_argument("train_offline: bad config");
  std::mt19937_64 rng(seed);
  TrainResult res;
  res.model.params = nn::init_params(nn::kDynamicsShape, rng);
  res.model.normalizer = normalizer;
  nn::AdamState adam(static_cast<Eigen::Index>(res.model.params.size()));

  res.curve.push_back(mean_loss(res.model, windows));
  if (!std::isfinite(res.curve.back())) throw std::runtime_error("train_offline: initial loss is not finite");

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<SampleWindow> prefix;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Curriculum stage: train on window prefixes.
    const std::size_t stage = cfg.curriculum_epochs > 0 ? static_cast<std::size_t>((epoch - 1) / cfg.curriculum_epochs)
                                                        : cfg.curriculum.size();
    const bool short_rollouts = stage < cfg.curriculum.size();
    if (short_rollouts) {
      const std::size_t len = std::min(cfg.curriculum[stage], windows.front().size());
      prefix.clear();
      for (const auto& w : windows) {
        SampleWindow p;
        p.dt = w.dt;
        p.samples.assign(w.samples.begin(), w.samples.begin() + static_cast<std::ptrdiff_t>(std::min(len, w.size())));
        prefix.push_back(std::move(p));
      }
    }
    const std::vector<SampleWindow>& source = short_rollouts ? prefix : windows;

    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    std::vector<const SampleWindow*> batch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i) {
        batch.push_back(&source[order[i]]);
      }
      model::LossAndGradient lg = model::batch_loss_and_grad(res.model, batch);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
        throw std::runtime_error("train_offline: non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
      nn::clip_by_norm(lg.grad, cfg.grad_clip);
      nn::AdamResult step = nn::adam_step(res.model.params.values(), lg.grad, std::move(adam), cfg.lr);
      res.model.params.values() = std::move(step.params);
      adam = std::move(step.state);
    }
    // Full-window loss after the epoch so the curve is comparable across
    // curriculum stages.
    const double loss = short_rollouts ? mean_loss(res.model, windows) : epoch_loss / static_cast<double>(seen);
    res.curve.push_back(loss);
    if (progress) progress(epoch, loss);
  }
  return res;
}

}  // namespace cmaml::pretrain
