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

#include "cmaml/harness/config.hpp"

#include <fstream>
#include <stdexcept>

#include "json_fields.hpp"

namespace cmaml::harness {

using nlohmann::json;

namespace detail {

// Each struct lists its fields once; the same list drives writing and reading.
template <class V>
void fields(V& v, model::Pose& p) {
  v("x", p.x);
  v("y", p.y);
  v("psi", p.psi);
}

template <class V>
void fields(V& v, track::TrackSpec& t) {
  v("straight_length", t.straight_length);
  v("radius", t.radius);
  v("half_width", t.half_width);
  v("ramp_width", t.ramp_width);
  v("center_x", t.center_x);
  v("center_y", t.center_y);
  v("heading", t.heading);
}

template <class V>
void fields(V& v, Scenario& s) {
  v("track", s.track);
  v("costmap_resolution", s.costmap_resolution);
  v("layout", s.layout);
  v("split_x", s.split_x);
  v("mu_rubber", s.mu_rubber);
  v("mu_foam", s.mu_foam);
  v("mu_cement", s.mu_cement);
  v("start", s.start);
  v("start_speed", s.start_speed);
}

template <class V>
void fields(V& v, sim::SimConfig& c) {
  v("mass", c.mass);
  v("yaw_inertia", c.yaw_inertia);
  v("front_axle", c.front_axle);
  v("rear_axle", c.rear_axle);
  v("front_stiffness_per_mu", c.front_stiffness_per_mu);
  v("rear_stiffness_per_mu", c.rear_stiffness_per_mu);
  v("gravity", c.gravity);
  v("max_steer", c.max_steer);
  v("max_accel", c.max_accel);
  v("rolling_drag", c.rolling_drag);
  v("steer_tau", c.steer_tau);
  v("roll_gain", c.roll_gain);
  v("roll_tau", c.roll_tau);
  v("low_speed", c.low_speed);
  v("dt_sim", c.dt_sim);
  v("noise_phi", c.noise_phi);
  v("noise_vx", c.noise_vx);
  v("noise_vy", c.noise_vy);
  v("noise_r", c.noise_r);
  v("noise_x", c.noise_x);
  v("noise_y", c.noise_y);
  v("noise_psi", c.noise_psi);
}

template <class V>
void fields(V& v, control::MppiConfig& c) {
  v("samples", c.samples);
  v("horizon", c.horizon);
  v("temperature", c.temperature);
  v("sigma_steer", c.sigma_steer);
  v("sigma_accel", c.sigma_accel);
  v("track_weight", c.track_weight);
  v("speed_weight", c.speed_weight);
  v("v_ref", c.v_ref);
  v("dt", c.dt);
  v("clamp_sequence", c.clamp_sequence);
}

template <class V>
void fields(V& v, adapt::AdaptConfig& c) {
  v("mode", c.mode);
  v("update_period", c.update_period);
  v("window", c.window);
  v("fast_lr", c.fast_lr);
  v("meta_lr", c.meta_lr);
  v("train_capacity", c.train_capacity);
  v("test_capacity", c.test_capacity);
  v("meta_period", c.meta_period);
  v("meta_gradient", c.meta_gradient);
  v("keep_probability", c.keep_probability);
  v("grad_clip", c.grad_clip);
  v("hvp_eps", c.hvp_eps);
  v("control_period", c.control_period);
}

template <class V>
void fields(V& v, pretrain::ExcitationConfig& c) {
  v("steer_tau", c.steer_tau);
  v("steer_sigma", c.steer_sigma);
  v("speed_mean", c.speed_mean);
  v("speed_sigma", c.speed_sigma);
  v("speed_tau", c.speed_tau);
  v("speed_min", c.speed_min);
  v("speed_max", c.speed_max);
  v("speed_gain", c.speed_gain);
  v("accel_sigma", c.accel_sigma);
  v("home_radius", c.home_radius);
  v("home_gain", c.home_gain);
}

template <class V>
void fields(V& v, pretrain::CollectConfig& c) {
  v("duration", c.duration);
  v("log_period", c.log_period);
  v("command_period", c.command_period);
  v("chunk", c.chunk);
  v("workspace", c.workspace);
  v("mu", c.mu);
  v("excitation", c.excitation);
}

template <class V>
void fields(V& v, pretrain::TrainConfig& c) {
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("lr", c.lr);
  v("grad_clip", c.grad_clip);
  v("curriculum", c.curriculum);
  v("curriculum_epochs", c.curriculum_epochs);
}

template <class V>
void fields(V& v, PretrainSettings& c) {
  v("collect", c.collect);
  v("train", c.train);
  v("holdout_duration", c.holdout_duration);
  v("window", c.window);
  v("stride", c.stride);
  v("holdout_stride", c.holdout_stride);
  v("seed", c.seed);
}

template <class V>
void fields(V& v, FinetuneSettings& c) {
  v("laps", c.laps);
  v("seed", c.seed);
}

template <class V>
void fields(V& v, InferenceSettings& c) {
  v("duration", c.duration);
}

template <class V>
void fields(V& v, ControlSettings& c) {
  v("laps", c.laps);
  v("first_scored_lap", c.first_scored_lap);
  v("max_time", c.max_time);
}

template <class V>
void fields(V& v, ReadaptSettings& c) {
  v("mu_a", c.mu_a);
  v("mu_b", c.mu_b);
  v("visit", c.visit);
  v("settle", c.settle);
  v("smoothing", c.smoothing);
}

template <class V>
void fields(V& v, ExperimentConfig& c) {
  v("name", c.name);
  v("description", c.description);
  v("seeds", c.seeds);
  v("modes", c.modes);
  v("output_dir", c.output_dir);
  v("pretrained_checkpoint", c.pretrained_checkpoint);
  v("checkpoint", c.checkpoint);
  v("log_dir", c.log_dir);
  v("scenario", c.scenario);
  v("sim", c.sim);
  v("mppi", c.mppi);
  v("adapt", c.adapt);
  v("pretrain", c.pretrain);
  v("finetune", c.finetune);
  v("inference", c.inference);
  v("control", c.control);
  v("readapt", c.readapt);
}

}  // namespace detail

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  if (modes.empty()) throw std::invalid_argument("config: modes must not be empty");
  scenario.track.validate();
  mppi.validate();
  adapt.validate();
  sim.validate(mppi.dt);
  if (std::abs(mppi.dt - adapt.control_period) > 1e-12) {
    throw std::invalid_argument("config: mppi.dt and adapt.control_period differ");
  }
  if (control.laps < control.first_scored_lap || control.first_scored_lap < 1) {
    throw std::invalid_argument("config: control.first_scored_lap must be in [1, laps]");
  }
  if (!(inference.duration > 0.0)) throw std::invalid_argument("config: inference.duration must be positive");
  if (finetune.laps < 1) throw std::invalid_argument("config: finetune.laps must be at least 1");
  if (!(readapt.visit > 0.0) || !(readapt.settle > 0.0 && readapt.settle <= 1.0) || readapt.smoothing < 1) {
    throw std::invalid_argument("config: bad readapt settings");
  }
}

json to_json(const ExperimentConfig& cfg) { return detail::to_json_object(cfg); }

ExperimentConfig config_from_json(const json& j) {
  return detail::from_json_object<ExperimentConfig>(j, "config");
}

namespace {

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse config " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : output_dir / p;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(parse_file(path)); }

ExperimentConfig load_configs(const std::vector<std::filesystem::path>& paths) {
  json merged = to_json(ExperimentConfig{});
  for (const auto& p : paths) merged.merge_patch(parse_file(p));
  return config_from_json(merged);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << to_json(cfg).dump(2) << "\n";
}

}  // namespace cmaml::harness
