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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmaml/adapt/adaptation.hpp"
#include "cmaml/control/mppi.hpp"
#include "cmaml/harness/closed_loop.hpp"
#include "cmaml/pretrain/pretrain.hpp"
#include "cmaml/sim/vehicle_sim.hpp"

namespace cmaml::harness {

struct PretrainSettings {
  pretrain::CollectConfig collect;
  pretrain::TrainConfig train;
  double holdout_duration = 120.0;  // separate collection for validation [s]
  std::size_t window = 101;         // samples per training window (100 steps)
  std::size_t stride = 10;
  std::size_t holdout_stride = 50;
  std::uint64_t seed = 1;
};

struct FinetuneSettings {
  int laps = 10;
  std::uint64_t seed = 1;
};

struct InferenceSettings {
  double duration = 60.0;  // recorded drive length [s]
};

struct ControlSettings {
  int laps = 18;
  int first_scored_lap = 2;
  double max_time = 200.0;  // per run [s]
};

/// Scripted A -> B -> A surface stream for the re-adaptation check.
struct ReadaptSettings {
  double mu_a = 1.8;  // rubber
  double mu_b = 0.7;  // foam
  double visit = 10.0;     // length of each visit [s]
  double settle = 0.25;    // threshold = mean loss over this trailing fraction of the first A visit
  int smoothing = 5;       // loss is averaged over this many consecutive updates
};

struct ExperimentConfig {
  std::string name = "default";
  std::string description;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<adapt::AdaptMode> modes{adapt::AdaptMode::kFixed, adapt::AdaptMode::kGd, adapt::AdaptMode::kCmaml};
  std::filesystem::path output_dir = "out";
  // Relative paths below are resolved against output_dir.
  std::filesystem::path pretrained_checkpoint = "pretrained.ckpt";
  std::filesystem::path checkpoint = "finetuned.ckpt";  // shared starting point of every mode
  std::filesystem::path log_dir = "logs";                // recorded drives for the inference replay

  Scenario scenario;
  sim::SimConfig sim;
  control::MppiConfig mppi;
  adapt::AdaptConfig adapt;
  PretrainSettings pretrain;
  FinetuneSettings finetune;
  InferenceSettings inference;
  ControlSettings control;
  ReadaptSettings readapt;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  /// `p` if absolute, else output_dir / p.
  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected so typos
/// surface. Relative paths stay relative to the working directory.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies the files as successive JSON merge patches over the defaults.
ExperimentConfig load_configs(const std::vector<std::filesystem::path>& paths);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace cmaml::harness
