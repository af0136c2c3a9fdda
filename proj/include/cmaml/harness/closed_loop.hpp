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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cmaml/adapt/adaptation.hpp"
#include "cmaml/control/mppi.hpp"
#include "cmaml/model/trajectory_log.hpp"
#include "cmaml/sim/vehicle_sim.hpp"
#include "cmaml/track/costmap.hpp"

namespace cmaml::harness {

enum class SurfaceLayout { kCement, kTwoSurface };

/// Track, surfaces and start pose of a driving scenario.
struct Scenario {
  track::TrackSpec track;
  double costmap_resolution = 0.05;
  SurfaceLayout layout = SurfaceLayout::kTwoSurface;
  double split_x = 0.0;  // rubber for x >= split_x, foam below
  double mu_rubber = 1.8;
  double mu_foam = 0.7;
  double mu_cement = 0.9;
  model::Pose start{-1.0, 1.5, 0.0};
  double start_speed = 0.0;

  [[nodiscard]] sim::SurfaceMap surfaces() const;
};

/// Counts directed crossings of the start line: the segment x = start_x,
/// y in [y_min, y_max], crossed toward +x.
struct LapCounter {
  double start_x = 0.0;
  double y_min = 0.0;
  double y_max = 2.0;
  bool have_prev = false;
  double prev_x = 0.0;
  double prev_y = 0.0;

  static LapCounter for_track(const track::TrackSpec& spec);
  /// True when the move from the previous position to (x, y) crosses the line.
  bool update(double x, double y);
};

struct LapRecord {
  int index = 0;         // 1 = first full lap
  double time = 0.0;     // lap time [s]
  double control_error = 0.0;  // sum of stage costs over the lap's steps
  double mean_track_cost = 0.0;
  double mean_speed = 0.0;
  int boundary_crossings = 0;
  int steps = 0;
};

/// Per-control-step telemetry.
struct StepRecord {
  double time = 0.0;
  model::VehicleState state;  // measured
  model::Pose pose;           // measured
  model::ControlInput command;
  int surface = 0;
  int lap = 0;  // 0 before the first start-line crossing
  double track_cost = 0.0;
  double stage_cost = 0.0;
  control::MppiTelemetry mppi;
};

/// Uniform surface from `start` onwards; used for scripted surface streams.
struct SurfacePhase {
  double start = 0.0;  // [s]
  int id = sim::kCement;
  double mu = 0.9;
};

struct EpisodeConfig {
  int laps = 18;           // stop after this many full laps (0 = run for max_time)
  double max_time = 200.0;  // [s]
  /// When non-empty, replaces the scenario's surface layout by a uniform
  /// surface that switches at the phase start times (sorted ascending).
  std::vector<SurfacePhase> schedule;
};

struct EpisodeResult {
  std::vector<model::Sample> log;  // measured samples, one per control step
  std::vector<StepRecord> steps;
  std::vector<LapRecord> laps;
  std::vector<adapt::AdaptEvent> events;
  adapt::AdaptState final_state;
  double path_length = 0.0;  // integrated true path [m]
  bool completed = false;
  std::string failure;  // empty unless the run aborted
};

/// Stream seeds derived from one run seed.
struct RunSeeds {
  std::uint64_t sim, mppi, adapt;
  static RunSeeds derive(std::uint64_t seed);
};

/// Closed-loop MPPI driving with online adaptation. Every T_up the freshest
/// N_c-sample window is passed to the update policy along with a boundary
/// flag that latches when the measured surface id changes.
EpisodeResult run_episode(const model::DynamicsModel& initial, const adapt::AdaptConfig& adapt_cfg,
                          const control::MppiConfig& mppi_cfg, const sim::SimConfig& sim_cfg,
                          const Scenario& scenario, const EpisodeConfig& episode, std::uint64_t seed);

/// Per-step telemetry CSV: time, lap, surface, measured state and pose,
/// command, track and stage cost, and MPPI statistics.
void write_step_csv(std::ostream& out, std::span<const StepRecord> steps);
void save_step_csv(const std::filesystem::path& path, std::span<const StepRecord> steps);

}  // namespace cmaml::harness
