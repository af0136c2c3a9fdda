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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cmaml/harness/config.hpp"

namespace cmaml::harness {

/// Progress messages for long runs; may be empty.
using ProgressFn = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Offline stages

struct PretrainReport {
  std::uint64_t samples = 0;  // decimated training samples
  std::uint64_t windows = 0;
  std::uint64_t holdout_windows = 0;
  int dropped_chunks = 0;
  double initial_loss = 0.0;
  double loss_at_20 = 0.0;  // full-window loss after epoch 20 (or the last epoch)
  double final_loss = 0.0;
  double holdout_loss = 0.0;
  double holdout_terminal_error = 0.0;  // [m]
  std::vector<double> curve;
};

struct PretrainOutcome {
  PretrainReport report;
  model::DynamicsModel model;
};

/// Collects cement data, trains the network and validates it on a separate
/// held-out collection.
PretrainOutcome run_pretrain(const ExperimentConfig& cfg, const ProgressFn& progress = {});

struct FinetuneReport {
  int laps = 0;
  double max_track_cost = 0.0;
  /// Mean N_c-window loss of the pre-trained and fine-tuned models on the
  /// same evaluation drive (cement oval, driven by the fine-tuned model).
  double eval_loss_pretrained = 0.0;
  double eval_loss_finetuned = 0.0;
  std::uint64_t eval_windows = 0;
};

struct FinetuneOutcome {
  FinetuneReport report;
  model::DynamicsModel model;
};

FinetuneOutcome run_finetune(const ExperimentConfig& cfg, const model::DynamicsModel& pretrained);

/// Loads a checkpoint with an error message naming the command that creates it.
model::DynamicsModel load_model(const std::filesystem::path& path, const std::string& producer);

// ---------------------------------------------------------------------------
// Inference comparison

std::filesystem::path drive_log_path(const ExperimentConfig& cfg, std::uint64_t seed);

/// Drives the two-surface oval with the fixed model for inference.duration
/// and returns the measured log.
std::vector<model::Sample> record_drive(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                        std::uint64_t seed);

/// Pre-update window losses of one policy replayed over a log.
struct ReplaySeries {
  std::vector<std::size_t> index;  // log index of the window's last sample
  std::vector<double> time;

  std::vector<double> loss;
  std::vector<int> surface;  // surface id of the window's last sample
};

/// Replays a log through the update policy: every T_up the freshest N_c
/// window is scored with the current parameters and then handed to the
/// policy. Boundary flags latch on surface id changes as in closed loop.
ReplaySeries replay_log(std::span<const model::Sample> log, const model::DynamicsModel& initial,
                        const adapt::AdaptConfig& adapt_cfg, std::uint64_t seed);

/// Mean over the window of |vx * r| on rubber, 0 elsewhere.
std::vector<double> rubber_cornering_indicator(std::span<const model::Sample> log, const ReplaySeries& series,
                                               std::size_t window);

double pearson(std::span<const double> a, std::span<const double> b);

struct ModeValue {
  std::string mode;
  double value = 0.0;
};

struct InferenceSeed {
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  std::uint64_t updates = 0;
  std::vector<ModeValue> mean_loss;  // cumulative mean of the per-update losses
  bool ordered = false;              // cmaml < gd < fixed
  double peak_correlation = 0.0;     // fixed-model loss vs rubber cornering
};

struct InferenceReport {
  std::string config_name;
  double duration = 0.0;
  int window = 0;
  std::vector<InferenceSeed> seeds;
  std::vector<ModeValue> mean_loss;  // averaged over seeds
  bool ordered_every_seed = false;
  bool correlation_positive_every_seed = false;
};

struct InferenceSeries {
  std::uint64_t seed = 0;
  std::vector<std::string> modes;
  std::vector<ReplaySeries> series;  // parallel to modes
  std::vector<double> indicator;
};

struct InferenceOutcome {
  InferenceReport report;
  std::vector<InferenceSeries> series;
};

/// Replays each seed's recorded drive. Throws std::runtime_error naming
/// `cmaml record-log` when a log is missing.
InferenceOutcome run_inference_experiment(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                          const ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// Control comparison

struct ControlRun {
  std::string mode;
  std::uint64_t seed = 0;
  bool completed = false;
  std::string failure;
  std::vector<LapRecord> laps;
  double mean_error = 0.0;  // over the scored laps
  double mean_lap_time = 0.0;
  double path_length = 0.0;
  /// Mean track cost inside the rubber-side corner over the scored laps.
  double rubber_corner_inside_cost = 0.0;
  std::uint64_t adapt_events = 0;
};

struct ModeSummary {
  std::string mode;
  int completed = 0;
  int failed = 0;
  double mean_error = 0.0;  // mean over completed runs
  double min_error = 0.0;
  double max_error = 0.0;
  double rubber_corner_inside_cost = 0.0;
};

struct ControlReport {
  std::string config_name;
  int laps = 0;
  int first_scored_lap = 0;
  std::vector<ControlRun> runs;
  std::vector<ModeSummary> modes;
  bool ordered = false;          // cmaml < gd < fixed on the means
  double cmaml_vs_fixed = 0.0;   // mean(cmaml) / mean(fixed)
};

struct ControlEpisode {
  ControlRun run;
  EpisodeResult episode;
};

/// One closed-loop run on the two-surface oval.
ControlEpisode run_control_episode(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                   adapt::AdaptMode mode, std::uint64_t seed);

/// Runs every (mode, seed) pair. `on_run` receives each finished episode so
/// callers can write telemetry without holding every run in memory.
ControlReport run_control_experiment(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                     const std::function<void(const ControlEpisode&)>& on_run = {},
                                     const ProgressFn& progress = {});

ControlReport summarize_control(const ExperimentConfig& cfg, std::vector<ControlRun> runs);

// ---------------------------------------------------------------------------
// Re-adaptation on a scripted A -> B -> A surface stream

struct ReadaptSeed {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  int updates_per_visit = 0;
  std::vector<ModeValue> first_visit;   // updates to threshold on the first A visit
  std::vector<ModeValue> second_visit;  // on the return to A
};

struct ReadaptReport {
  std::string config_name;
  std::vector<ReadaptSeed> seeds;
  std::vector<ModeValue> mean_first_visit;
  std::vector<ModeValue> mean_second_visit;
  bool cmaml_not_slower = false;  // mean cmaml <= mean gd on the second visit
};

struct ReadaptSeries {
  std::uint64_t seed = 0;
  std::vector<std::string> modes;
  std::vector<ReplaySeries> series;
  double threshold = 0.0;
  double second_visit_start = 0.0;
};

struct ReadaptOutcome {
  ReadaptReport report;
  std::vector<ReadaptSeries> series;
};

/// Surface phases A, B, A of readapt.visit seconds each.
std::vector<SurfacePhase> readapt_schedule(const ReadaptSettings& s);

/// First update index (1-based) within [begin, end) whose trailing mean over
/// `smoothing` updates (restricted to the visit) is <= threshold; returns
/// end - begin + 1 when never reached.
int updates_to_threshold(std::span<const double> loss, std::size_t begin, std::size_t end, double threshold,
                         int smoothing);

/// Records one stream per seed with the fixed model and replays it with gd
/// and cmaml. The threshold is gd's settled loss at the end of the first A
/// visit.
ReadaptOutcome run_readapt_experiment(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                      const ProgressFn& progress = {});

}  // namespace cmaml::harness
