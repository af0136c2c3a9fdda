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

#include "cmaml/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cmaml/model/trajectory_log.hpp"

namespace cmaml::harness {

using adapt::AdaptMode;
using model::Sample;

namespace {

void report(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

const ModeValue* find_mode(const std::vector<ModeValue>& values, std::string_view mode) {
  for (const auto& v : values) {
    if (v.mode == mode) return &v;
  }
  return nullptr;
}

/// cmaml < gd < fixed; false when a mode is missing.
bool strictly_ordered(const std::vector<ModeValue>& values) {
  const ModeValue* f = find_mode(values, "fixed");
  const ModeValue* g = find_mode(values, "gd");
  const ModeValue* c = find_mode(values, "cmaml");
  return f && g && c && c->value < g->value && g->value < f->value;
}

adapt::AdaptConfig with_mode(const adapt::AdaptConfig& cfg, AdaptMode mode) {
  adapt::AdaptConfig out = cfg;
  out.mode = mode;
  return out;
}

/// Every T_up tick's window, as seen by the online policy.
std::vector<model::SampleWindow> tick_windows(std::span<const Sample> log, const adapt::AdaptConfig& cfg) {
  const auto spu = static_cast<std::size_t>(cfg.steps_per_update());
  const auto n = static_cast<std::size_t>(cfg.window);
  std::vector<model::SampleWindow> out;
  for (std::size_t k = spu; k < log.size(); k += spu) {
    if (k + 1 >= n) out.push_back(model::window_ending_at(log, k, n, cfg.control_period));
  }
  return out;
}

}  // namespace

PretrainOutcome run_pretrain(const ExperimentConfig& cfg, const ProgressFn& progress) {
  const PretrainSettings& ps = cfg.pretrain;
  pretrain::CollectConfig collect = ps.collect;
  collect.sim = cfg.sim;
  report(progress, "collecting " + std::to_string(collect.duration) + " s of cement driving");
  const pretrain::Dataset data = pretrain::decimate(pretrain::collect_data(collect, ps.seed), cfg.mppi.dt);
  collect.duration = ps.holdout_duration;
  const pretrain::Dataset holdout = pretrain::decimate(pretrain::collect_data(collect, ps.seed + 1), cfg.mppi.dt);

  const nn::InputNormalizer norm = pretrain::fit_normalizer(data);
  const auto windows = pretrain::make_windows(data, ps.window, ps.stride);
  const auto held = pretrain::make_windows(holdout, ps.window, ps.holdout_stride);
  if (windows.empty() || held.empty()) throw std::runtime_error("run_pretrain: not enough data for a single window");
  report(progress, "training on " + std::to_string(windows.size()) + " windows");

  pretrain::TrainResult res = pretrain::train_offline(windows, norm, ps.train, ps.seed + 2, [&](int epoch, double loss) {
    if (epoch % 10 == 0) report(progress, "epoch " + std::to_string(epoch) + " loss " + std::to_string(loss));
  });

  PretrainOutcome out;
  PretrainReport& r = out.report;
  r.samples = data.sample_count();
  r.windows = windows.size();
  r.holdout_windows = held.size();
  r.dropped_chunks = data.dropped_chunks;
  r.curve = res.curve;
  r.initial_loss = res.curve.front();
  r.loss_at_20 = res.curve[std::min<std::size_t>(20, res.curve.size() - 1)];
  r.final_loss = res.curve.back();
  r.holdout_loss = pretrain::mean_loss(res.model, held);
  r.holdout_terminal_error = pretrain::mean_terminal_error(res.model, held);
  out.model = std::move(res.model);
  return out;
}

FinetuneOutcome run_finetune(const ExperimentConfig& cfg, const model::DynamicsModel& pretrained) {
  pretrain::FinetuneResult ft = pretrain::finetune_on_track(pretrained, cfg.mppi, cfg.sim, cfg.scenario,
                                                            cfg.finetune.laps, cfg.adapt, cfg.finetune.seed);
  // Paired evaluation on a fresh cement drive.
  Scenario cement = cfg.scenario;
  cement.layout = SurfaceLayout::kCement;
  EpisodeConfig ep;
  ep.laps = 2;
  const EpisodeResult drive = run_episode(ft.model, with_mode(cfg.adapt, AdaptMode::kFixed), cfg.mppi, cfg.sim,
                                          cement, ep, cfg.finetune.seed + 1);
  if (!drive.completed) throw std::runtime_error("run_finetune: evaluation drive aborted: " + drive.failure);
  const auto windows = tick_windows(drive.log, cfg.adapt);

  FinetuneOutcome out;
  out.report.laps = ft.laps;
  out.report.max_track_cost = ft.max_track_cost;
  out.report.eval_windows = windows.size();
  out.report.eval_loss_pretrained = pretrain::mean_loss(pretrained, windows);
  out.report.eval_loss_finetuned = pretrain::mean_loss(ft.model, windows);
  out.model = std::move(ft.model);
  return out;
}

model::DynamicsModel load_model(const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("checkpoint " + path.string() + " not found; create it with `cmaml " + producer + "`");
  }
  return model::DynamicsModel::from_checkpoint(nn::load_checkpoint(path));
}

std::filesystem::path drive_log_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.resolve(cfg.log_dir) / ("drive_seed" + std::to_string(seed) + ".csv");
}

std::vector<Sample> record_drive(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                 std::uint64_t seed) {
  EpisodeConfig ep;
  ep.laps = 0;
  ep.max_time = cfg.inference.duration;
  EpisodeResult run =
      run_episode(model, with_mode(cfg.adapt, AdaptMode::kFixed), cfg.mppi, cfg.sim, cfg.scenario, ep, seed);
  if (!run.completed) throw std::runtime_error("record_drive: run aborted: " + run.failure);
  return std::move(run.log);
}

ReplaySeries replay_log(std::span<const Sample> log, const model::DynamicsModel& initial,
                        const adapt::AdaptConfig& adapt_cfg, std::uint64_t seed) {
  adapt_cfg.validate();
  adapt::AdaptState state = adapt::make_adapt_state(initial, RunSeeds::derive(seed).adapt);
  const auto spu = static_cast<std::size_t>(adapt_cfg.steps_per_update());
  const auto n = static_cast<std::size_t>(adapt_cfg.window);
  ReplaySeries out;
  if (log.empty()) return out;
  bool boundary = false;
  int prev_surface = log.front().surface;
  for (std::size_t k = 1; k < log.size(); ++k) {
    if (log[k].surface != prev_surface) boundary = true;
    prev_surface = log[k].surface;
    if (k % spu != 0 || k + 1 < n) continue;
    const model::SampleWindow w = model::window_ending_at(log, k, n, adapt_cfg.control_period);
    double loss = 0.0;
    try {
      loss = model::rollout_loss(state.active(adapt_cfg), w);
    } catch (const model::DivergenceError& e) {
      throw std::runtime_error("replay_log: model diverged on the window ending at t=" +
                               std::to_string(log[k].time) + ": " + e.what());
    }
    out.index.push_back(k);
    out.time.push_back(log[k].time);
    out.loss.push_back(loss);
    out.surface.push_back(log[k].surface);
    adapt::AdaptStep step = adapt::on_sample(state, w, boundary, adapt_cfg);
    state = std::move(step.state);
    boundary = false;
  }
  return out;
}

std::vector<double> rubber_cornering_indicator(std::span<const Sample> log, const ReplaySeries& series,
                                               std::size_t window) {
  std::vector<double> out;
  out.reserve(series.index.size());
  for (std::size_t k : series.index) {
    const std::size_t first = k + 1 >= window ? k + 1 - window : 0;
    double total = 0.0;
    for (std::size_t i = first; i <= k; ++i) {
      if (log[i].surface == sim::kRubber) total += std::abs(log[i].state.vx * log[i].state.r);
    }
    out.push_back(total / static_cast<double>(k - first + 1));
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal series of length >= 2");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

InferenceOutcome run_inference_experiment(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                          const ProgressFn& progress) {
  cfg.validate();
  InferenceOutcome out;
  InferenceReport& rep = out.report;
  rep.config_name = cfg.name;
  rep.duration = cfg.inference.duration;
  rep.window = cfg.adapt.window;
  rep.ordered_every_seed = true;
  rep.correlation_positive_every_seed = true;
  std::vector<std::vector<double>> per_mode(cfg.modes.size());

  for (std::uint64_t seed : cfg.seeds) {
    const std::filesystem::path path = drive_log_path(cfg, seed);
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("drive log " + path.string() + " not found; record it with `cmaml record-log --seeds " +
                               std::to_string(seed) + "` using the same config");
    }
    const std::vector<Sample> log = model::load_trajectory_csv(path);
    report(progress, "replaying " + path.string());

    InferenceSeed s;
    s.seed = seed;
    s.samples = log.size();
    InferenceSeries ser;
    ser.seed = seed;
    for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
      ReplaySeries r = replay_log(log, model, with_mode(cfg.adapt, cfg.modes[m]), seed);
      const double mean = mean_of(r.loss);
      s.updates = r.loss.size();
      s.mean_loss.push_back({std::string(adapt::to_string(cfg.modes[m])), mean});
      per_mode[m].push_back(mean);
      ser.modes.emplace_back(adapt::to_string(cfg.modes[m]));
      ser.series.push_back(std::move(r));
    }
    s.ordered = strictly_ordered(s.mean_loss);
    // Peak localization is judged on the fixed model when present.
    std::size_t ref = 0;
    for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
      if (cfg.modes[m] == AdaptMode::kFixed) ref = m;
    }
    ser.indicator = rubber_cornering_indicator(log, ser.series[ref], static_cast<std::size_t>(cfg.adapt.window));
    s.peak_correlation = pearson(ser.series[ref].loss, ser.indicator);
    rep.ordered_every_seed = rep.ordered_every_seed && s.ordered;
    rep.correlation_positive_every_seed = rep.correlation_positive_every_seed && s.peak_correlation > 0.0;
    rep.seeds.push_back(std::move(s));
    out.series.push_back(std::move(ser));
  }
  for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
    rep.mean_loss.push_back({std::string(adapt::to_string(cfg.modes[m])), mean_of(per_mode[m])});
  }
  return out;
}

ControlEpisode run_control_episode(const ExperimentConfig& cfg, const model::DynamicsModel& model, AdaptMode mode,
                                   std::uint64_t seed) {
  EpisodeConfig ep;
  ep.laps = cfg.control.laps;
  ep.max_time = cfg.control.max_time;
  ControlEpisode out;
  out.episode = run_episode(model, with_mode(cfg.adapt, mode), cfg.mppi, cfg.sim, cfg.scenario, ep, seed);
  const EpisodeResult& e = out.episode;
  ControlRun& r = out.run;
  r.mode = adapt::to_string(mode);
  r.seed = seed;
  r.completed = e.completed;
  r.failure = e.failure;
  r.laps = e.laps;
  r.path_length = e.path_length;
  r.adapt_events = e.events.size();

  std::vector<double> errors, times;
  for (const LapRecord& l : e.laps) {
    if (l.index >= cfg.control.first_scored_lap && l.index <= cfg.control.laps) {
      errors.push_back(l.control_error);
      times.push_back(l.time);
    }
  }
  r.mean_error = mean_of(errors);
  r.mean_lap_time = mean_of(times);

  // Corner on the +X side of the track frame; the two-surface split puts it
  // on rubber.
  const track::TrackSpec& t = cfg.scenario.track;
  const double c = std::cos(t.heading), s = std::sin(t.heading);
  double inside = 0.0;
  int in_sector = 0;
  for (const StepRecord& st : e.steps) {
    if (st.lap < cfg.control.first_scored_lap || st.lap > cfg.control.laps) continue;
    const double dx = st.pose.x - t.center_x, dy = st.pose.y - t.center_y;
    const double xt = c * dx + s * dy, yt = -s * dx + c * dy;
    if (xt <= 0.5 * t.straight_length) continue;
    ++in_sector;
    if (std::hypot(xt - 0.5 * t.straight_length, yt) < t.radius) inside += st.track_cost;
  }
  r.rubber_corner_inside_cost = in_sector > 0 ? inside / in_sector : 0.0;
  return out;
}

ControlReport summarize_control(const ExperimentConfig& cfg, std::vector<ControlRun> runs) {
  ControlReport rep;
  rep.config_name = cfg.name;
  rep.laps = cfg.control.laps;
  rep.first_scored_lap = cfg.control.first_scored_lap;
  rep.runs = std::move(runs);
  std::vector<ModeValue> means;
  bool all_completed = true;
  for (AdaptMode mode : cfg.modes) {
    ModeSummary m;
    m.mode = adapt::to_string(mode);
    std::vector<double> errs, inside;
    for (const ControlRun& r : rep.runs) {
      if (r.mode != m.mode) continue;
      if (r.completed) {
        errs.push_back(r.mean_error);
        inside.push_back(r.rubber_corner_inside_cost);
        ++m.completed;
      } else {
        ++m.failed;
        all_completed = false;
      }
    }
    if (!errs.empty()) {
      m.mean_error = mean_of(errs);
      m.min_error = *std::min_element(errs.begin(), errs.end());
      m.max_error = *std::max_element(errs.begin(), errs.end());
      m.rubber_corner_inside_cost = mean_of(inside);
    }
    means.push_back({m.mode, m.mean_error});
    rep.modes.push_back(std::move(m));
  }
  rep.ordered = all_completed && strictly_ordered(means);
  const ModeValue* f = find_mode(means, "fixed");
  const ModeValue* cm = find_mode(means, "cmaml");
  rep.cmaml_vs_fixed = (f && cm && f->value > 0.0) ? cm->value / f->value : 0.0;
  return rep;
}

ControlReport run_control_experiment(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                     const std::function<void(const ControlEpisode&)>& on_run,
                                     const ProgressFn& progress) {
  cfg.validate();
  std::vector<ControlRun> runs;
  for (std::uint64_t seed : cfg.seeds) {
    for (AdaptMode mode : cfg.modes) {
      ControlEpisode ep = run_control_episode(cfg, model, mode, seed);
      report(progress, std::string(adapt::to_string(mode)) + " seed " + std::to_string(seed) + ": " +
                           (ep.run.completed ? "mean error " + std::to_string(ep.run.mean_error)
                                             : "failed (" + ep.run.failure + ")"));
      if (on_run) on_run(ep);
      runs.push_back(std::move(ep.run));
    }
  }
  return summarize_control(cfg, std::move(runs));
}

std::vector<SurfacePhase> readapt_schedule(const ReadaptSettings& s) {
  return {{0.0, sim::kRubber, s.mu_a}, {s.visit, sim::kFoam, s.mu_b}, {2.0 * s.visit, sim::kRubber, s.mu_a}};
}

int updates_to_threshold(std::span<const double> loss, std::size_t begin, std::size_t end, double threshold,
                         int smoothing) {
  if (end > loss.size() || begin > end || smoothing < 1) throw std::invalid_argument("updates_to_threshold: bad range");
  for (std::size_t j = begin; j < end; ++j) {
    const std::size_t first = std::max(begin, j + 1 >= static_cast<std::size_t>(smoothing) ? j + 1 - smoothing : 0);
    const double m = mean_of(loss.subspan(first, j - first + 1));
    if (m <= threshold) return static_cast<int>(j - begin + 1);
  }
  return static_cast<int>(end - begin + 1);
}

ReadaptOutcome run_readapt_experiment(const ExperimentConfig& cfg, const model::DynamicsModel& model,
                                      const ProgressFn& progress) {
  cfg.validate();
  const ReadaptSettings& rs = cfg.readapt;
  const std::vector<AdaptMode> modes{AdaptMode::kGd, AdaptMode::kCmaml};
  ReadaptOutcome out;
  ReadaptReport& rep = out.report;
  rep.config_name = cfg.name;
  std::vector<std::vector<double>> first(modes.size()), second(modes.size());

  for (std::uint64_t seed : cfg.seeds) {
    EpisodeConfig ep;
    ep.laps = 0;
    ep.max_time = 3.0 * rs.visit;
    ep.schedule = readapt_schedule(rs);
    const EpisodeResult drive =
        run_episode(model, with_mode(cfg.adapt, AdaptMode::kFixed), cfg.mppi, cfg.sim, cfg.scenario, ep, seed);
    if (!drive.completed) throw std::runtime_error("run_readapt_experiment: stream drive aborted: " + drive.failure);
    report(progress, "re-adaptation stream seed " + std::to_string(seed));

    ReadaptSeries ser;
    ser.seed = seed;
    ser.second_visit_start = 2.0 * rs.visit;
    for (AdaptMode m : modes) {
      ser.modes.emplace_back(adapt::to_string(m));
      ser.series.push_back(replay_log(drive.log, model, with_mode(cfg.adapt, m), seed));
    }
    // Visit ranges in update indices (identical for every mode).
    const std::vector<double>& times = ser.series.front().time;
    auto index_at = [&](double t) {
      return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t - 1e-9) - times.begin());
    };
    const std::size_t a1_end = index_at(rs.visit);
    const std::size_t a2_begin = index_at(2.0 * rs.visit);
    const std::size_t a2_end = times.size();
    const auto settle = static_cast<std::size_t>(std::ceil(rs.settle * static_cast<double>(a1_end)));
    const std::span<const double> gd_loss(ser.series.front().loss);
    const double threshold = mean_of(gd_loss.subspan(a1_end - settle, settle));

    ReadaptSeed s;
    s.seed = seed;
    s.threshold = threshold;
    s.updates_per_visit = static_cast<int>(a2_end - a2_begin);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const std::vector<double>& loss = ser.series[m].loss;
      const int c1 = updates_to_threshold(loss, 0, a1_end, threshold, rs.smoothing);
      const int c2 = updates_to_threshold(loss, a2_begin, a2_end, threshold, rs.smoothing);
      s.first_visit.push_back({ser.modes[m], static_cast<double>(c1)});
      s.second_visit.push_back({ser.modes[m], static_cast<double>(c2)});
      first[m].push_back(c1);
      second[m].push_back(c2);
    }
    ser.threshold = threshold;
    rep.seeds.push_back(std::move(s));
    out.series.push_back(std::move(ser));
  }
  for (std::size_t m = 0; m < modes.size(); ++m) {
    rep.mean_first_visit.push_back({std::string(adapt::to_string(modes[m])), mean_of(first[m])});
    rep.mean_second_visit.push_back({std::string(adapt::to_string(modes[m])), mean_of(second[m])});
  }
  rep.cmaml_not_slower = rep.mean_second_visit[1].value <= rep.mean_second_visit[0].value;
  return out;
}

}  // namespace cmaml::harness
