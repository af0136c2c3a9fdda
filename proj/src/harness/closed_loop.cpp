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

#include "cmaml/harness/closed_loop.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace cmaml::harness {

using model::Sample;

sim::SurfaceMap Scenario::surfaces() const {
  if (layout == SurfaceLayout::kCement) return sim::SurfaceMap::uniform(mu_cement);
  return sim::SurfaceMap::two_surface(split_x, 6.0, mu_rubber, mu_foam, mu_cement);
}

LapCounter LapCounter::for_track(const track::TrackSpec& spec) {
  // The start line spans the top straight's band; the track frame is assumed
  // axis-aligned for lap counting.
  LapCounter c;
  c.start_x = spec.center_x;
  c.y_min = spec.center_y;
  c.y_max = spec.center_y + 2.0 * spec.radius;
  return c;
}

bool LapCounter::update(double x, double y) {
  const bool crossed = have_prev && prev_x < start_x && x >= start_x && y >= y_min && y <= y_max &&
                       prev_y >= y_min && prev_y <= y_max;
  have_prev = true;
  prev_x = x;
  prev_y = y;
  return crossed;
}

RunSeeds RunSeeds::derive(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6d707069u};
  std::uint32_t out[6];
  seq.generate(out, out + 6);
  auto join = [&](int i) { return (static_cast<std::uint64_t>(out[2 * i]) << 32) | out[2 * i + 1]; };
  return {join(0), join(1), join(2)};
}

EpisodeResult run_episode(const model::DynamicsModel& initial, const adapt::AdaptConfig& adapt_cfg,
                          const control::MppiConfig& mppi_cfg, const sim::SimConfig& sim_cfg,
                          const Scenario& scenario, const EpisodeConfig& episode, std::uint64_t seed) {
  adapt_cfg.validate();
  mppi_cfg.validate();
  sim_cfg.validate(mppi_cfg.dt);
  if (std::abs(mppi_cfg.dt - adapt_cfg.control_period) > 1e-12) {
    throw std::invalid_argument("run_episode: controller and adaptation disagree on the control period");
  }
  const RunSeeds seeds = RunSeeds::derive(seed);
  std::mt19937_64 sim_rng(seeds.sim);
  std::mt19937_64 mppi_rng(seeds.mppi);

  const track::Costmap costmap = track::build_oval_costmap(scenario.track, scenario.costmap_resolution);
  std::vector<std::pair<double, sim::SurfaceMap>> phases;
  for (const SurfacePhase& ph : episode.schedule) {
    if (!phases.empty() && ph.start < phases.back().first) {
      throw std::invalid_argument("run_episode: surface schedule must be sorted by start time");
    }
    sim::SurfaceMap m = sim::SurfaceMap::uniform(ph.mu);
    m.default_id = ph.id;
    phases.emplace_back(ph.start, std::move(m));
  }
  const sim::SurfaceMap layout = scenario.surfaces();
  auto surfaces_at = [&](double t) -> const sim::SurfaceMap& {
    const sim::SurfaceMap* current = &layout;
    for (const auto& [start, m] : phases) {
      if (start <= t + 1e-9) current = &m;
    }
    return *current;
  };
  const int steps_per_update = adapt_cfg.steps_per_update();
  const auto window_len = static_cast<std::size_t>(adapt_cfg.window);

  EpisodeResult res;
  res.final_state = adapt::make_adapt_state(initial, seeds.adapt);
  adapt::AdaptState& adapt_state = res.final_state;
  control::BatchRollout engine(adapt_state.active(adapt_cfg));
  control::ControlSequence seq = control::zero_sequence(mppi_cfg);

  sim::SimState car;
  car.pose = scenario.start;
  car.state.vx = scenario.start_speed;
  LapCounter laps = LapCounter::for_track(scenario.track);
  laps.update(car.pose.x, car.pose.y);

  int lap = 0;
  LapRecord current;
  bool boundary_pending = false;
  int prev_surface = sim::surface_at(surfaces_at(0.0), car.pose.x, car.pose.y).id;
  const long max_steps = std::lround(episode.max_time / mppi_cfg.dt);

  for (long k = 0; k <= max_steps; ++k) {
    const double t = static_cast<double>(k) * mppi_cfg.dt;
    const sim::SurfaceMap& surfaces = surfaces_at(t);
    const auto [state, pose] = sim::observe(car, sim_cfg, sim_rng);
    const int surface = sim::surface_at(surfaces, car.pose.x, car.pose.y).id;
    if (surface != prev_surface) {
      boundary_pending = true;
      if (lap > 0) ++current.boundary_crossings;
    }
    prev_surface = surface;
    res.log.push_back({t, state, pose, {}, surface});

    // Adaptation tick on the freshest window.
    if (k > 0 && k % steps_per_update == 0 && res.log.size() >= window_len) {
      const model::SampleWindow window =
          model::window_ending_at(res.log, res.log.size() - 1, window_len, mppi_cfg.dt);
      adapt::AdaptStep step = adapt::on_sample(adapt_state, window, boundary_pending, adapt_cfg);
      boundary_pending = false;
      const bool changed = !(step.state.active(adapt_cfg).params == adapt_state.active(adapt_cfg).params);
      adapt_state = std::move(step.state);
      res.events.insert(res.events.end(), step.events.begin(), step.events.end());
      if (changed) engine = control::BatchRollout(adapt_state.active(adapt_cfg));
    }

    control::MppiResult u;
    try {
      u = control::mppi_step(engine, state, pose, seq, costmap, mppi_cfg, mppi_rng);
    } catch (const std::exception& e) {
      res.failure = std::string("controller: ") + e.what();
      break;
    }
    seq = std::move(u.next);
    res.log.back().input = u.command;

    StepRecord rec;
    rec.time = t;
    rec.state = state;
    rec.pose = pose;
    rec.command = u.command;
    rec.surface = surface;
    rec.lap = lap;
    rec.track_cost = track::track_cost(costmap, pose.x, pose.y);
    rec.stage_cost = control::stage_cost(state, pose, costmap, mppi_cfg);
    rec.mppi = u.telemetry;
    res.steps.push_back(rec);
    if (lap > 0) {
      current.control_error += rec.stage_cost;
      current.mean_track_cost += rec.track_cost;
      current.mean_speed += state.vx;
      ++current.steps;
    }

    const model::Pose before = car.pose;
    try {
      car = sim::sim_step(car, sim_cfg, surfaces, u.command, mppi_cfg.dt);
    } catch (const std::exception& e) {
      res.failure = std::string("simulator: ") + e.what();
      break;
    }
    res.path_length += std::hypot(car.pose.x - before.x, car.pose.y - before.y);

    if (laps.update(car.pose.x, car.pose.y)) {
      if (lap > 0) {
        current.index = lap;
        current.time = static_cast<double>(current.steps) * mppi_cfg.dt;
        current.mean_track_cost /= std::max(1, current.steps);
        current.mean_speed /= std::max(1, current.steps);
        res.laps.push_back(current);
      }
      current = LapRecord{};
      ++lap;
      if (episode.laps > 0 && static_cast<int>(res.laps.size()) >= episode.laps) {
        res.completed = true;
        break;
      }
    }
  }
  if (episode.laps == 0 && res.failure.empty()) res.completed = true;
  if (!res.completed && res.failure.empty()) res.failure = "time limit reached before completing the laps";
  return res;
}

void write_step_csv(std::ostream& out, std::span<const StepRecord> steps) {
  out << "time,lap,surface,x,y,psi,phi,vx,vy,r,u1,u2,track_cost,stage_cost,min_cost,mean_cost,effective_samples,"
         "diverged\n";
  char buf[512];
  for (const StepRecord& s : steps) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  s.time, s.lap, s.surface, s.pose.x, s.pose.y, s.pose.psi, s.state.phi, s.state.vx, s.state.vy,
                  s.state.r, s.command.u1, s.command.u2, s.track_cost, s.stage_cost, s.mppi.min_cost,
                  s.mppi.mean_cost, s.mppi.effective_samples, s.mppi.diverged);
    out << buf;
  }
}

void save_step_csv(const std::filesystem::path& path, std::span<const StepRecord> steps) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_step_csv(out, steps);
  if (!out) throw std::runtime_error("error writing " + path.string());
}

}  // namespace cmaml::harness
