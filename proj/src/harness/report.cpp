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

#include "cmaml/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cmaml/harness/svg.hpp"
#include "json_fields.hpp"

namespace cmaml::harness {

using nlohmann::json;

namespace detail {

template <class V>
void fields(V& v, PretrainReport& r) {
  v("samples", r.samples);
  v("windows", r.windows);
  v("holdout_windows", r.holdout_windows);
  v("dropped_chunks", r.dropped_chunks);
  v("initial_loss", r.initial_loss);
  v("loss_at_20", r.loss_at_20);
  v("final_loss", r.final_loss);
  v("holdout_loss", r.holdout_loss);
  v("holdout_terminal_error", r.holdout_terminal_error);
  v("curve", r.curve);
}

template <class V>
void fields(V& v, FinetuneReport& r) {
  v("laps", r.laps);
  v("max_track_cost", r.max_track_cost);
  v("eval_loss_pretrained", r.eval_loss_pretrained);
  v("eval_loss_finetuned", r.eval_loss_finetuned);
  v("eval_windows", r.eval_windows);
}

template <class V>
void fields(V& v, ModeValue& m) {
  v("mode", m.mode);
  v("value", m.value);
}

template <class V>
void fields(V& v, InferenceSeed& s) {
  v("seed", s.seed);
  v("samples", s.samples);
  v("updates", s.updates);
  v("mean_loss", s.mean_loss);
  v("ordered", s.ordered);
  v("peak_correlation", s.peak_correlation);
}

template <class V>
void fields(V& v, InferenceReport& r) {
  v("config_name", r.config_name);
  v("duration", r.duration);
  v("window", r.window);
  v("seeds", r.seeds);
  v("mean_loss", r.mean_loss);
  v("ordered_every_seed", r.ordered_every_seed);
  v("correlation_positive_every_seed", r.correlation_positive_every_seed);
}

template <class V>
void fields(V& v, LapRecord& l) {
  v("index", l.index);
  v("time", l.time);
  v("control_error", l.control_error);
  v("mean_track_cost", l.mean_track_cost);
  v("mean_speed", l.mean_speed);
  v("boundary_crossings", l.boundary_crossings);
  v("steps", l.steps);
}

template <class V>
void fields(V& v, ControlRun& r) {
  v("mode", r.mode);
  v("seed", r.seed);
  v("completed", r.completed);
  v("failure", r.failure);
  v("laps", r.laps);
  v("mean_error", r.mean_error);
  v("mean_lap_time", r.mean_lap_time);
  v("path_length", r.path_length);
  v("rubber_corner_inside_cost", r.rubber_corner_inside_cost);
  v("adapt_events", r.adapt_events);
}

template <class V>
void fields(V& v, ModeSummary& m) {
  v("mode", m.mode);
  v("completed", m.completed);
  v("failed", m.failed);
  v("mean_error", m.mean_error);
  v("min_error", m.min_error);
  v("max_error", m.max_error);
  v("rubber_corner_inside_cost", m.rubber_corner_inside_cost);
}

template <class V>
void fields(V& v, ControlReport& r) {
  v("config_name", r.config_name);
  v("laps", r.laps);
  v("first_scored_lap", r.first_scored_lap);
  v("runs", r.runs);
  v("modes", r.modes);
  v("ordered", r.ordered);
  v("cmaml_vs_fixed", r.cmaml_vs_fixed);
}

template <class V>
void fields(V& v, ReadaptSeed& s) {
  v("seed", s.seed);
  v("threshold", s.threshold);
  v("updates_per_visit", s.updates_per_visit);
  v("first_visit", s.first_visit);
  v("second_visit", s.second_visit);
}

template <class V>
void fields(V& v, ReadaptReport& r) {
  v("config_name", r.config_name);
  v("seeds", r.seeds);
  v("mean_first_visit", r.mean_first_visit);
  v("mean_second_visit", r.mean_second_visit);
  v("cmaml_not_slower", r.cmaml_not_slower);
}

}  // namespace detail

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("error writing " + path.string());
}

double value_of(const std::vector<ModeValue>& values, const std::string& mode) {
  for (const auto& v : values) {
    if (v.mode == mode) return v.value;
  }
  return std::nan("");
}

std::vector<std::string> mode_names(const std::vector<ModeValue>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) out.push_back(v.mode);
  return out;
}

/// Rows of per-mode values followed by Mean and Min rows.
std::string mode_table(const std::vector<std::string>& modes, const std::vector<std::string>& row_names,
                       const std::vector<std::vector<double>>& rows) {
  std::string out = "test";
  for (const auto& m : modes) out += "," + m;
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += row_names[i];
    for (double v : rows[i]) out += "," + fmt(v);
    out += "\n";
  }
  if (rows.empty()) return out;
  for (const char* agg : {"mean", "min"}) {
    out += agg;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      double acc = agg[1] == 'e' ? 0.0 : rows.front()[m];
      for (const auto& r : rows) acc = agg[1] == 'e' ? acc + r[m] : std::min(acc, r[m]);
      if (agg[1] == 'e') acc /= static_cast<double>(rows.size());
      out += "," + fmt(acc);
    }
    out += "\n";
  }
  return out;
}

/// Centerline of the oval as a closed polyline in world coordinates.
void centerline(const track::TrackSpec& t, std::vector<double>& xs, std::vector<double>& ys) {
  const double h = 0.5 * t.straight_length;
  std::vector<std::pair<double, double>> pts;
  const int n = 48;
  for (int i = 0; i <= n; ++i) pts.emplace_back(-h + t.straight_length * i / n, t.radius);
  for (int i = 1; i <= n; ++i) {
    const double a = std::numbers::pi / 2 - std::numbers::pi * i / n;
    pts.emplace_back(h + t.radius * std::cos(a), t.radius * std::sin(a));
  }
  for (int i = 1; i <= n; ++i) pts.emplace_back(h - t.straight_length * i / n, -t.radius);
  for (int i = 1; i <= n; ++i) {
    const double a = -std::numbers::pi / 2 - std::numbers::pi * i / n;
    pts.emplace_back(-h + t.radius * std::cos(a), t.radius * std::sin(a));
  }
  const double c = std::cos(t.heading), s = std::sin(t.heading);
  xs.clear();
  ys.clear();
  for (auto [x, y] : pts) {
    xs.push_back(t.center_x + c * x - s * y);
    ys.push_back(t.center_y + s * x + c * y);
  }
}

}  // namespace

json to_json(const PretrainReport& r) { return detail::to_json_object(r); }
json to_json(const FinetuneReport& r) { return detail::to_json_object(r); }
json to_json(const InferenceReport& r) { return detail::to_json_object(r); }
json to_json(const ControlReport& r) { return detail::to_json_object(r); }
json to_json(const ReadaptReport& r) { return detail::to_json_object(r); }

PretrainReport pretrain_report_from_json(const json& j) { return detail::from_json_object<PretrainReport>(j, "pretrain"); }
FinetuneReport finetune_report_from_json(const json& j) { return detail::from_json_object<FinetuneReport>(j, "finetune"); }
InferenceReport inference_report_from_json(const json& j) {
  return detail::from_json_object<InferenceReport>(j, "inference");
}
ControlReport control_report_from_json(const json& j) { return detail::from_json_object<ControlReport>(j, "control"); }
ReadaptReport readapt_report_from_json(const json& j) { return detail::from_json_object<ReadaptReport>(j, "readapt"); }

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
  }
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
  const std::filesystem::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

std::string inference_table_csv(const InferenceReport& r) {
  if (r.seeds.empty()) return "test\n";
  const auto modes = mode_names(r.seeds.front().mean_loss);
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  for (const auto& s : r.seeds) {
    names.push_back("seed" + std::to_string(s.seed));
    std::vector<double> row;
    for (const auto& m : modes) row.push_back(value_of(s.mean_loss, m));
    rows.push_back(std::move(row));
  }
  return mode_table(modes, names, rows);
}

std::string control_table_csv(const ControlReport& r) {
  std::vector<std::string> modes;
  for (const auto& m : r.modes) modes.push_back(m.mode);
  std::vector<std::uint64_t> seeds;
  for (const auto& run : r.runs) {
    if (std::find(seeds.begin(), seeds.end(), run.seed) == seeds.end()) seeds.push_back(run.seed);
  }
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  for (std::uint64_t seed : seeds) {
    names.push_back("seed" + std::to_string(seed));
    std::vector<double> row;
    for (const auto& m : modes) {
      double v = std::nan("");
      for (const auto& run : r.runs) {
        if (run.seed == seed && run.mode == m && run.completed) v = run.mean_error;
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return mode_table(modes, names, rows);
}

std::string lap_table_csv(const ControlReport& r) {
  std::string out = "mode,seed,lap,time,control_error,mean_track_cost,mean_speed,boundary_crossings,steps\n";
  for (const auto& run : r.runs) {
    for (const auto& l : run.laps) {
      out += run.mode + "," + std::to_string(run.seed) + "," + std::to_string(l.index) + "," + fmt(l.time) + "," +
             fmt(l.control_error) + "," + fmt(l.mean_track_cost) + "," + fmt(l.mean_speed) + "," +
             std::to_string(l.boundary_crossings) + "," + std::to_string(l.steps) + "\n";
    }
  }
  return out;
}

std::string readapt_table_csv(const ReadaptReport& r) {
  std::string out = "seed,threshold,updates_per_visit";
  if (r.seeds.empty()) return out + "\n";
  const auto modes = mode_names(r.seeds.front().first_visit);
  for (const auto& m : modes) out += "," + m + "_first," + m + "_second";
  out += "\n";
  for (const auto& s : r.seeds) {
    out += std::to_string(s.seed) + "," + fmt(s.threshold) + "," + std::to_string(s.updates_per_visit);
    for (const auto& m : modes) out += "," + fmt(value_of(s.first_visit, m)) + "," + fmt(value_of(s.second_visit, m));
    out += "\n";
  }
  return out;
}

void emit_pretrain_report(const std::filesystem::path& dir, const PretrainReport& r) {
  prepare_output_dir(dir);
  write_json(dir / kPretrainJson, to_json(r));
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < r.curve.size(); ++e) csv += std::to_string(e) + "," + fmt(r.curve[e]) + "\n";
  write_text(dir / "pretrain_curve.csv", csv);

  SvgDocument doc(640, 400);
  PlotFrame f{70, 40, 540, 300, 0.0, std::max<double>(1.0, static_cast<double>(r.curve.size() - 1)), -3.0, 3.0};
  std::vector<double> xs, ys;
  for (std::size_t e = 0; e < r.curve.size(); ++e) {
    xs.push_back(static_cast<double>(e));
    ys.push_back(std::log10(std::max(r.curve[e], 1e-12)));
  }
  f.y_min = std::floor(*std::min_element(ys.begin(), ys.end()));
  f.y_max = std::ceil(*std::max_element(ys.begin(), ys.end()));
  if (f.y_max <= f.y_min) f.y_max = f.y_min + 1.0;
  draw_axes(doc, f, "epoch", "log10 mean 100-step rollout loss");
  plot_series(doc, f, xs, ys, "#1f77b4", 1.5);
  doc.save(dir / "pretrain_curve.svg");
}

void emit_finetune_report(const std::filesystem::path& dir, const FinetuneReport& r) {
  prepare_output_dir(dir);
  write_json(dir / kFinetuneJson, to_json(r));
}

void emit_inference_report(const std::filesystem::path& dir, const InferenceOutcome& out) {
  prepare_output_dir(dir);
  write_json(dir / kInferenceJson, to_json(out.report));
  write_text(dir / "inference_table.csv", inference_table_csv(out.report));
  for (const InferenceSeries& s : out.series) {
    const std::string tag = "seed" + std::to_string(s.seed);
    std::string csv = "time,surface,rubber_cornering";
    for (const auto& m : s.modes) csv += ",loss_" + m;
    csv += "\n";
    const ReplaySeries& ref = s.series.front();
    for (std::size_t i = 0; i < ref.time.size(); ++i) {
      csv += fmt(ref.time[i]) + "," + std::to_string(ref.surface[i]) + "," + fmt(s.indicator[i]);
      for (const auto& ser : s.series) csv += "," + fmt(ser.loss[i]);
      csv += "\n";
    }
    write_text(dir / ("inference_" + tag + ".csv"), csv);

    SvgDocument doc(900, 420);
    double y_max = 0.0;
    for (const auto& ser : s.series) {
      for (double v : ser.loss) y_max = std::max(y_max, v);
    }
    PlotFrame f{80, 40, 780, 300, 0.0, ref.time.empty() ? 1.0 : std::ceil(ref.time.back()), 0.0, nice_ceiling(y_max)};
    // Shade rubber cornering: indicator above half its peak.
    const double peak = s.indicator.empty() ? 0.0 : *std::max_element(s.indicator.begin(), s.indicator.end());
    for (std::size_t i = 0; i + 1 < ref.time.size(); ++i) {
      if (peak > 0.0 && s.indicator[i] > 0.5 * peak) {
        doc.rect(f.px(ref.time[i]), f.top, f.px(ref.time[i + 1]) - f.px(ref.time[i]), f.height, "#d62728", 0.12);
      }
    }
    draw_axes(doc, f, "time [s]", "N_c-step inference loss (" + tag + ")");
    std::vector<std::string> colors;
    for (std::size_t m = 0; m < s.series.size(); ++m) {
      colors.push_back(mode_color(s.modes[m]));
      plot_series(doc, f, s.series[m].time, s.series[m].loss, colors.back(), 1.0);
    }
    auto labels = s.modes;
    labels.emplace_back("shaded: cornering on rubber");
    colors.emplace_back("#f2b8b8");
    draw_legend(doc, f.left + f.width - 200, f.top + 14, labels, colors);
    doc.save(dir / ("inference_" + tag + ".svg"));
  }
}

void emit_control_report(const std::filesystem::path& dir, const ControlReport& r) {
  prepare_output_dir(dir);
  write_json(dir / kControlJson, to_json(r));
  write_text(dir / "control_table.csv", control_table_csv(r));
  write_text(dir / "laps.csv", lap_table_csv(r));
}

void emit_control_figures(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          std::span<const ControlEpisode> runs) {
  prepare_output_dir(dir);
  if (runs.empty()) return;
  const track::TrackSpec& t = cfg.scenario.track;
  std::vector<double> cx, cy;
  centerline(t, cx, cy);
  const double extent = 0.5 * t.straight_length + t.radius + t.half_width + t.ramp_width;
  const double panel = 300.0;
  const double scale = panel / (2.0 * extent);
  const double span_y = 2.0 * (t.radius + t.half_width + t.ramp_width);
  const double panel_h = span_y * scale;

  SvgDocument traj(panel + 80, (panel_h + 50) * static_cast<double>(runs.size()) + 20);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double top = 30 + (panel_h + 50) * static_cast<double>(i);
    PlotFrame f{40, top, panel, panel_h, t.center_x - extent, t.center_x + extent,
                t.center_y - span_y / 2, t.center_y + span_y / 2};
    std::vector<double> px, py;
    for (std::size_t k = 0; k < cx.size(); ++k) {
      px.push_back(f.px(cx[k]));
      py.push_back(f.py(cy[k]));
    }
    traj.rect(f.left, f.top, f.width, f.height, "#444444");
    traj.polyline(px, py, "#ffffff", 2.0 * t.half_width * scale);
    if (cfg.scenario.layout == SurfaceLayout::kTwoSurface) {
      traj.line(f.px(cfg.scenario.split_x), f.top, f.px(cfg.scenario.split_x), f.top + f.height, "#bbbbbb", 1.0,
                true);
    }
    const ControlEpisode& run = runs[i];
    std::vector<double> tx, ty;
    for (const StepRecord& s : run.episode.steps) {
      if (s.lap < 1 || s.lap > 10) continue;
      tx.push_back(f.px(s.pose.x));
      ty.push_back(f.py(s.pose.y));
    }
    traj.polyline(tx, ty, mode_color(run.run.mode), 0.8);
    traj.text(f.left, top - 8,
              "(" + std::string(1, static_cast<char>('a' + i)) + ") " + run.run.mode + ", seed " +
                  std::to_string(run.run.seed) + ", laps 1-10 (left: foam, right: rubber)",
              11);
  }
  traj.save(dir / "control_trajectories.svg");

  SvgDocument speed(900, 420);
  double t_max = 0.0;
  for (const ControlEpisode& run : runs) {
    for (const StepRecord& s : run.episode.steps) {
      if (s.lap >= 1 && s.lap <= 10) t_max = std::max(t_max, s.time);
    }
  }
  PlotFrame f{80, 40, 780, 300, 0.0, std::max(1.0, std::ceil(t_max)), 0.0, 4.0};
  draw_axes(speed, f, "time [s]", "measured speed v_x [m/s], laps 1-10");
  speed.line(f.px(f.x_min), f.py(cfg.mppi.v_ref), f.px(f.x_max), f.py(cfg.mppi.v_ref), "black", 1.0, true);
  std::vector<std::string> labels, colors;
  for (const ControlEpisode& run : runs) {
    std::vector<double> xs, ys;
    for (const StepRecord& s : run.episode.steps) {
      if (s.lap < 1 || s.lap > 10) continue;
      xs.push_back(s.time);
      ys.push_back(s.state.vx);
    }
    plot_series(speed, f, xs, ys, mode_color(run.run.mode), 0.8);
    labels.push_back(run.run.mode);
    colors.push_back(mode_color(run.run.mode));
  }
  labels.emplace_back("v_ref");
  colors.emplace_back("black");
  draw_legend(speed, f.left + f.width - 120, f.top + f.height - 60, labels, colors);
  speed.save(dir / "control_speed.svg");
}

void emit_run_logs(const std::filesystem::path& dir, const ControlEpisode& run) {
  const std::filesystem::path runs = dir / "runs";
  prepare_output_dir(runs);
  const std::string tag = run.run.mode + "_seed" + std::to_string(run.run.seed);
  save_step_csv(runs / (tag + "_steps.csv"), run.episode.steps);
  std::ofstream out(runs / (tag + "_adapt.csv"));
  if (!out) throw std::runtime_error("cannot write adaptation log for " + tag);
  adapt::write_adapt_log_header(out);
  adapt::write_adapt_log(out, run.episode.events);
}

void emit_readapt_report(const std::filesystem::path& dir, const ReadaptOutcome& out) {
  prepare_output_dir(dir);
  write_json(dir / kReadaptJson, to_json(out.report));
  write_text(dir / "readapt.csv", readapt_table_csv(out.report));
  for (const ReadaptSeries& s : out.series) {
    SvgDocument doc(900, 420);
    double y_max = s.threshold;
    for (const auto& ser : s.series) {
      for (double v : ser.loss) y_max = std::max(y_max, v);
    }
    const ReplaySeries& ref = s.series.front();
    PlotFrame f{80, 40, 780, 300, 0.0, ref.time.empty() ? 1.0 : std::ceil(ref.time.back()), 0.0, nice_ceiling(y_max)};
    draw_axes(doc, f, "time [s]", "N_c-step loss, surface stream A-B-A (seed " + std::to_string(s.seed) + ")");
    const double visit = s.second_visit_start / 2.0;
    for (double tb : {visit, 2.0 * visit}) doc.line(f.px(tb), f.top, f.px(tb), f.top + f.height, "#999999", 1.0, true);
    doc.line(f.px(f.x_min), f.py(s.threshold), f.px(f.x_max), f.py(s.threshold), "black", 1.0, true);
    std::vector<std::string> colors;
    for (std::size_t m = 0; m < s.series.size(); ++m) {
      colors.push_back(mode_color(s.modes[m]));
      plot_series(doc, f, s.series[m].time, s.series[m].loss, colors.back(), 1.0);
    }
    auto labels = s.modes;
    labels.emplace_back("threshold");
    colors.emplace_back("black");
    draw_legend(doc, f.left + f.width - 120, f.top + 14, labels, colors);
    doc.save(dir / ("readapt_seed" + std::to_string(s.seed) + ".svg"));
  }
}

json emit_summary(const std::filesystem::path& dir) {
  json summary = json::object();
  bool any = false;
  if (std::filesystem::exists(dir / kPretrainJson)) {
    summary["pretrain"] = to_json(pretrain_report_from_json(read_json(dir / kPretrainJson)));
    summary["pretrain"].erase("curve");
    any = true;
  }
  if (std::filesystem::exists(dir / kFinetuneJson)) {
    summary["finetune"] = to_json(finetune_report_from_json(read_json(dir / kFinetuneJson)));
    any = true;
  }
  if (std::filesystem::exists(dir / kInferenceJson)) {
    const InferenceReport r = inference_report_from_json(read_json(dir / kInferenceJson));
    write_text(dir / "inference_table.csv", inference_table_csv(r));
    summary["inference"] = {{"mean_loss", to_json(r)["mean_loss"]},
                            {"ordered_every_seed", r.ordered_every_seed},
                            {"correlation_positive_every_seed", r.correlation_positive_every_seed}};
    any = true;
  }
  if (std::filesystem::exists(dir / kControlJson)) {
    const ControlReport r = control_report_from_json(read_json(dir / kControlJson));
    write_text(dir / "control_table.csv", control_table_csv(r));
    write_text(dir / "laps.csv", lap_table_csv(r));
    summary["control"] = {{"modes", to_json(r)["modes"]}, {"ordered", r.ordered}, {"cmaml_vs_fixed", r.cmaml_vs_fixed}};
    any = true;
  }
  if (std::filesystem::exists(dir / kReadaptJson)) {
    const ReadaptReport r = readapt_report_from_json(read_json(dir / kReadaptJson));
    write_text(dir / "readapt.csv", readapt_table_csv(r));
    const json j = to_json(r);
    summary["readapt"] = {{"mean_first_visit", j["mean_first_visit"]},
                          {"mean_second_visit", j["mean_second_visit"]},
                          {"cmaml_not_slower", r.cmaml_not_slower}};
    any = true;
  }
  if (!any) throw std::runtime_error("no experiment reports found in " + dir.string());
  write_json(dir / kSummaryJson, summary);
  return summary;
}

}  // namespace cmaml::harness
