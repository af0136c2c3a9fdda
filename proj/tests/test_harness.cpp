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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cmaml/harness/config.hpp"
#include "cmaml/harness/experiments.hpp"
#include "cmaml/harness/report.hpp"
#include "cmaml/harness/svg.hpp"
#include "model_fixtures.hpp"

using namespace cmaml::harness;
using cmaml::adapt::AdaptMode;
using cmaml::model::Sample;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmaml_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

cmaml::model::DynamicsModel small_model() {
  std::mt19937_64 rng(21);
  return cmaml::testing::random_model(rng, 0.05);
}

// Point on the oval centerline at clockwise arc length s from the middle of
// the top straight.
std::pair<double, double> centerline_point(const cmaml::track::TrackSpec& t, double s) {
  const double L = t.straight_length, R = t.radius, h = L / 2;
  s = std::fmod(s, t.centerline_length());
  if (s < h) return {s, R};
  s -= h;
  if (s < std::numbers::pi * R) {
    const double a = std::numbers::pi / 2 - s / R;
    return {h + R * std::cos(a), R * std::sin(a)};
  }
  s -= std::numbers::pi * R;
  if (s < L) return {h - s, -R};
  s -= L;
  if (s < std::numbers::pi * R) {
    const double a = -std::numbers::pi / 2 - s / R;
    return {-h + R * std::cos(a), R * std::sin(a)};
  }
  return {-h + (s - std::numbers::pi * R), R};
}

ControlRun fake_run(const std::string& mode, std::uint64_t seed, double error, bool completed = true) {
  ControlRun r;
  r.mode = mode;
  r.seed = seed;
  r.completed = completed;
  r.mean_error = error;
  r.laps.push_back({1, 4.5, error, 0.01, 2.9, 2, 225});
  return r;
}

}  // namespace

TEST_CASE("lap counter counts directed crossings of the start line only") {
  cmaml::track::TrackSpec t;
  LapCounter c = LapCounter::for_track(t);
  CHECK_FALSE(c.update(-0.1, 1.0));
  CHECK(c.update(0.1, 1.0));          // +x across the line
  CHECK_FALSE(c.update(-0.1, 1.0));   // backwards
  CHECK_FALSE(c.update(0.1, 1.0 + 2.5));  // outside the segment
  CHECK_FALSE(c.update(-0.1, -1.0));
  CHECK_FALSE(c.update(0.1, -1.0));   // bottom straight is not the start line
}

TEST_CASE("one crossing per clockwise lap and path length matches laps") {
  cmaml::track::TrackSpec t;
  LapCounter c = LapCounter::for_track(t);
  const double length = t.centerline_length();
  const double ds = 0.05;
  int laps = 0;
  double path = 0.0;
  auto prev = centerline_point(t, length - 1.0);
  c.update(prev.first, prev.second);
  for (double s = length - 1.0 + ds; s < length - 1.0 + 3.5 * length; s += ds) {
    const auto p = centerline_point(t, s);
    path += std::hypot(p.first - prev.first, p.second - prev.second);
    prev = p;
    if (c.update(p.first, p.second)) ++laps;
  }
  CHECK(laps == 4);  // start 1 m before the line, 3.5 laps
  CHECK(path / (3.5 * length) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("config round-trips through JSON and rejects typos") {
  ExperimentConfig cfg;
  cfg.name = "round-trip";
  cfg.seeds = {4, 9};
  cfg.modes = {AdaptMode::kGd};
  cfg.mppi.samples = 64;
  cfg.adapt.meta_gradient = cmaml::adapt::MetaGradientMode::kFirstOrder;
  cfg.scenario.layout = SurfaceLayout::kCement;
  cfg.pretrain.train.curriculum = {11, 26};
  const auto j = to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.mppi.samples == 64);

  auto bad = j;
  bad["mppi"]["samles"] = 3;
  CHECK_THROWS_WITH_AS(config_from_json(bad), doctest::Contains("config.mppi.samles"), std::invalid_argument);
  auto wrong_type = j;
  wrong_type["adapt"]["window"] = "14";
  CHECK_THROWS_AS(config_from_json(wrong_type), std::invalid_argument);
  auto bad_mode = j;
  bad_mode["modes"] = {"maml"};
  CHECK_THROWS_AS(config_from_json(bad_mode), std::invalid_argument);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.mppi.horizon = 50;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.control.first_scored_lap = 19;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config files merge in order over the defaults") {
  const fs::path dir = scratch_dir("merge");
  std::ofstream(dir / "a.json") << R"({"seeds": [7], "mppi": {"samples": 128}})";
  std::ofstream(dir / "b.json") << R"({"mppi": {"temperature": 20.0}, "output_dir": "elsewhere"})";
  const ExperimentConfig cfg = load_configs({dir / "a.json", dir / "b.json"});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7});
  CHECK(cfg.mppi.samples == 128);
  CHECK(cfg.mppi.temperature == 20.0);
  CHECK(cfg.mppi.horizon == 100);
  CHECK(cfg.resolve(cfg.checkpoint) == fs::path("elsewhere") / "finetuned.ckpt");
  CHECK(cfg.resolve("/abs/x.ckpt") == fs::path("/abs/x.ckpt"));
}

TEST_CASE("closed loop is deterministic and follows a surface schedule") {
  ExperimentConfig cfg;
  cfg.mppi.samples = 64;
  cfg.adapt.mode = AdaptMode::kGd;
  EpisodeConfig ep;
  ep.laps = 0;
  ep.max_time = 1.0;
  ep.schedule = {{0.0, cmaml::sim::kRubber, 1.2}, {0.5, cmaml::sim::kFoam, 0.6}};
  const auto m = small_model();
  const EpisodeResult a = run_episode(m, cfg.adapt, cfg.mppi, cfg.sim, cfg.scenario, ep, 5);
  const EpisodeResult b = run_episode(m, cfg.adapt, cfg.mppi, cfg.sim, cfg.scenario, ep, 5);
  REQUIRE(a.completed);
  REQUIRE(a.steps.size() == 51);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].command.u1 == b.steps[k].command.u1);
    CHECK(a.steps[k].command.u2 == b.steps[k].command.u2);
    CHECK(a.steps[k].pose.x == b.steps[k].pose.x);
    CHECK(a.steps[k].surface == (a.steps[k].time < 0.5 - 1e-9 ? cmaml::sim::kRubber : cmaml::sim::kFoam));
    CHECK(std::abs(a.steps[k].command.u1) <= 1.0);
  }
  CHECK(a.final_state.fast.params == b.final_state.fast.params);

  // Replaying the closed-loop log reproduces the online pre-update losses.
  const ReplaySeries r = replay_log(a.log, m, cfg.adapt, 5);
  REQUIRE(r.loss.size() == a.events.size());
  for (std::size_t i = 0; i < r.loss.size(); ++i) {
    CHECK(r.loss[i] == a.events[i].loss_before);
    CHECK(r.time[i] == a.events[i].time);
  }
}

TEST_CASE("fixed replay is repeatable and leaves the log untouched") {
  ExperimentConfig cfg;
  cfg.mppi.samples = 32;
  EpisodeConfig ep;
  ep.laps = 0;
  ep.max_time = 1.0;
  const auto m = small_model();
  const EpisodeResult run = run_episode(m, cfg.adapt, cfg.mppi, cfg.sim, cfg.scenario, ep, 3);
  const std::vector<Sample> copy = run.log;
  cmaml::adapt::AdaptConfig fixed = cfg.adapt;
  fixed.mode = AdaptMode::kFixed;
  const ReplaySeries a = replay_log(run.log, m, fixed, 1);
  const ReplaySeries b = replay_log(run.log, m, fixed, 2);
  CHECK(a.loss == b.loss);
  REQUIRE(copy.size() == run.log.size());
  for (std::size_t i = 0; i < copy.size(); ++i) {
    CHECK(copy[i].pose.x == run.log[i].pose.x);
    CHECK(copy[i].input.u1 == run.log[i].input.u1);
  }
  // Ticks every 4 samples once a full 14-sample window exists.
  REQUIRE_FALSE(a.index.empty());
  CHECK(a.index.front() == 16);
  CHECK(a.index[1] - a.index[0] == 4);
}

TEST_CASE("updates to threshold") {
  const std::vector<double> loss{5, 4, 3, 2, 1, 1, 1, 9, 9, 1};
  CHECK(updates_to_threshold(loss, 0, 7, 3.0, 1) == 3);
  CHECK(updates_to_threshold(loss, 0, 7, 2.0, 3) == 5);  // mean(3, 2, 1)
  CHECK(updates_to_threshold(loss, 7, 10, 2.0, 1) == 3);
  CHECK(updates_to_threshold(loss, 7, 9, 2.0, 1) == 3);  // never: visit length + 1
  CHECK_THROWS_AS(updates_to_threshold(loss, 0, 11, 1.0, 1), std::invalid_argument);
}

TEST_CASE("pearson correlation") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{2, 4, 6, 8};
  const std::vector<double> c{4, 3, 2, 1};
  const std::vector<double> flat{1, 1, 1, 1};
  CHECK(pearson(a, b) == doctest::Approx(1.0));
  CHECK(pearson(a, c) == doctest::Approx(-1.0));
  CHECK(pearson(a, flat) == 0.0);
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("rubber cornering indicator ignores other surfaces") {
  std::vector<Sample> log(20);
  for (std::size_t i = 0; i < log.size(); ++i) {
    log[i].state.vx = 2.0;
    log[i].state.r = -1.5;
    log[i].surface = i < 10 ? cmaml::sim::kFoam : cmaml::sim::kRubber;
  }
  ReplaySeries s;
  s.index = {9, 19, 12};
  const auto ind = rubber_cornering_indicator(log, s, 4);
  CHECK(ind[0] == 0.0);
  CHECK(ind[1] == doctest::Approx(3.0));
  CHECK(ind[2] == doctest::Approx(2.25));  // 3 of 4 samples on rubber
}

TEST_CASE("control summary ordering and failures") {
  ExperimentConfig cfg;
  std::vector<ControlRun> runs{fake_run("fixed", 1, 300), fake_run("gd", 1, 200), fake_run("cmaml", 1, 100),
                               fake_run("fixed", 2, 320), fake_run("gd", 2, 220), fake_run("cmaml", 2, 180)};
  ControlReport rep = summarize_control(cfg, runs);
  CHECK(rep.ordered);
  REQUIRE(rep.modes.size() == 3);
  CHECK(rep.modes[0].mean_error == doctest::Approx(310));
  CHECK(rep.modes[2].min_error == 100);
  CHECK(rep.cmaml_vs_fixed == doctest::Approx(140.0 / 310.0));

  runs.push_back(fake_run("gd", 3, 0, false));
  rep = summarize_control(cfg, runs);
  CHECK_FALSE(rep.ordered);
  CHECK(rep.modes[1].failed == 1);
  CHECK(rep.modes[1].completed == 2);
}

TEST_CASE("reports round-trip through the readers") {
  ExperimentConfig cfg;
  ControlReport c = summarize_control(cfg, {fake_run("fixed", 1, 3.25), fake_run("gd", 1, 2.5),
                                            fake_run("cmaml", 1, 0.1), fake_run("cmaml", 2, 0, false)});
  c.runs.back().failure = "controller: all rollouts diverged";
  const auto jc = to_json(c);
  CHECK(to_json(control_report_from_json(jc)) == jc);

  InferenceReport inf;
  inf.config_name = "x";
  inf.duration = 60;
  inf.window = 14;
  inf.seeds.push_back({1, 3001, 747, {{"fixed", 0.1}, {"gd", 0.05}, {"cmaml", 0.04}}, true, 0.3});
  inf.mean_loss = {{"fixed", 0.1}};
  const auto ji = to_json(inf);
  CHECK(to_json(inference_report_from_json(ji)) == ji);

  ReadaptReport ra;
  ra.seeds.push_back({2, 0.01, 125, {{"gd", 4}, {"cmaml", 5}}, {{"gd", 9}, {"cmaml", 2}}});
  ra.cmaml_not_slower = true;
  const auto jr = to_json(ra);
  CHECK(to_json(readapt_report_from_json(jr)) == jr);

  PretrainReport pr;
  pr.curve = {3.0, 2.0, 1.0};
  const auto jp = to_json(pr);
  CHECK(to_json(pretrain_report_from_json(jp)) == jp);

  auto bad = jc;
  bad["extra"] = 1;
  CHECK_THROWS_AS(control_report_from_json(bad), std::invalid_argument);
}

TEST_CASE("tables list seeds, then mean and min") {
  ExperimentConfig cfg;
  const ControlReport c = summarize_control(cfg, {fake_run("fixed", 1, 4), fake_run("gd", 1, 3),
                                                  fake_run("cmaml", 1, 2), fake_run("fixed", 2, 6),
                                                  fake_run("gd", 2, 5), fake_run("cmaml", 2, 1)});
  CHECK(control_table_csv(c) == "test,fixed,gd,cmaml\nseed1,4,3,2\nseed2,6,5,1\nmean,5,4,1.5\nmin,4,3,1\n");
  const std::string laps = lap_table_csv(c);
  CHECK(laps.rfind("mode,seed,lap,time,control_error", 0) == 0);
}

TEST_CASE("emitted files are byte-identical across runs") {
  ExperimentConfig cfg;
  const ControlReport c = summarize_control(cfg, {fake_run("fixed", 1, 4), fake_run("gd", 1, 3),
                                                  fake_run("cmaml", 1, 2)});
  const fs::path a = scratch_dir("emit_a"), b = scratch_dir("emit_b");
  emit_control_report(a, c);
  emit_control_report(b, c);
  for (const char* f : {"control.json", "control_table.csv", "laps.csv"}) {
    std::ifstream fa(a / f), fb(b / f);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK_FALSE(sa.str().empty());
  }
  const auto summary = emit_summary(a);
  CHECK(summary.contains("control"));
  CHECK(fs::exists(a / "summary.json"));
}

TEST_CASE("unwritable output directory is an error") {
  const fs::path dir = scratch_dir("unwritable");
  std::ofstream(dir / "file") << "x";
  CHECK_THROWS_AS(prepare_output_dir(dir / "file" / "sub"), std::runtime_error);
  CHECK_THROWS_AS(emit_summary(dir), std::runtime_error);  // no reports there
}

TEST_CASE("missing drive log names the generating command") {
  ExperimentConfig cfg;
  cfg.output_dir = scratch_dir("missing_log");
  cfg.seeds = {3};
  CHECK_THROWS_WITH_AS(run_inference_experiment(cfg, small_model()), doctest::Contains("cmaml record-log"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(load_model(cfg.resolve(cfg.checkpoint), "finetune"), doctest::Contains("cmaml finetune"),
                       std::runtime_error);
}

TEST_CASE("re-adaptation schedule is A, B, A") {
  ReadaptSettings s;
  s.visit = 7.0;
  const auto sched = readapt_schedule(s);
  REQUIRE(sched.size() == 3);
  CHECK(sched[0].id == sched[2].id);
  CHECK(sched[1].id != sched[0].id);
  CHECK(sched[1].start == 7.0);
  CHECK(sched[2].start == 14.0);
  CHECK(sched[1].mu == s.mu_b);
}

TEST_CASE("svg output is stable and well formed") {
  auto draw = [] {
    SvgDocument doc(100, 50);
    PlotFrame f{10, 10, 80, 30, 0.0, 1.0, 0.0, 2.0};
    draw_axes(doc, f, "t", "y < 1 & z");
    const std::vector<double> xs{0.0, 0.5, 1.0}, ys{0.0, 3.0, -0.0};
    plot_series(doc, f, xs, ys, mode_color("cmaml"));
    return doc.str();
  };
  const std::string s = draw();
  CHECK(s == draw());
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("y &lt; 1 &amp; z") != std::string::npos);
  CHECK(s.find("-0.00") == std::string::npos);
  CHECK(s.find("points=\"10.00,40.00 50.00,10.00 90.00,40.00\"") != std::string::npos);  // y clipped to range
  CHECK(nice_ceiling(0.037) == doctest::Approx(0.05));
  CHECK(nice_ceiling(3.0) == doctest::Approx(5.0));
}

TEST_CASE("step telemetry CSV has one row per step") {
  std::vector<StepRecord> steps(3);
  steps[1].mppi.effective_samples = 12.5;
  std::ostringstream out;
  write_step_csv(out, steps);
  const std::string s = out.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
  CHECK(s.rfind("time,lap,surface,x,y,psi,phi,vx,vy,r,u1,u2,track_cost,stage_cost,min_cost,mean_cost,"
                "effective_samples,diverged\n",
                0) == 0);
}

TEST_CASE("shipped configs reproduce the built-in defaults") {
  const fs::path dir = CMAML_CONFIG_DIR;
  const ExperimentConfig merged = load_configs({dir / "plumbing-default.json", dir / "paper-default.json"});
  ExperimentConfig defaults;
  defaults.output_dir = "out";
  auto a = to_json(merged), b = to_json(defaults);
  for (auto* j : {&a, &b}) {
    j->erase("name");
    j->erase("description");
  }
  CHECK(a == b);
  const ExperimentConfig paper = load_config(dir / "paper-default.json");
  CHECK(paper.adapt.window == 14);
  CHECK(paper.mppi.track_weight == 600.0);
}
