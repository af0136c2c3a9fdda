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
#include <stdexcept>

#include "cmaml/pretrain/pretrain.hpp"

using namespace cmaml::pretrain;
using cmaml::model::Sample;

namespace {

CollectConfig short_collect(double duration) {
  CollectConfig c;
  c.duration = duration;
  return c;
}

bool same_samples(const Sample& a, const Sample& b) {
  return a.time == b.time && a.state.phi == b.state.phi && a.state.vx == b.state.vx && a.state.vy == b.state.vy &&
         a.state.r == b.state.r && a.pose.x == b.pose.x && a.pose.y == b.pose.y && a.pose.psi == b.pose.psi &&
         a.input.u1 == b.input.u1 && a.input.u2 == b.input.u2 && a.surface == b.surface;
}

}  // namespace

TEST_CASE("zero duration collects nothing") {
  const Dataset d = collect_data(short_collect(0.0), 1);
  CHECK(d.sample_count() == 0);
  CHECK(d.segments.empty());
}

TEST_CASE("collection is deterministic per seed") {
  const Dataset a = collect_data(short_collect(20.0), 3);
  const Dataset b = collect_data(short_collect(20.0), 3);
  REQUIRE(a.segments.size() == b.segments.size());
  for (std::size_t s = 0; s < a.segments.size(); ++s) {
    REQUIRE(a.segments[s].size() == b.segments[s].size());
    for (std::size_t i = 0; i < a.segments[s].size(); ++i) CHECK(same_samples(a.segments[s][i], b.segments[s][i]));
  }
  const Dataset c = collect_data(short_collect(20.0), 4);
  CHECK_FALSE(same_samples(a.segments[0][100], c.segments[0][100]));
}

TEST_CASE("excitation covers every network input channel") {
  const Dataset d = decimate(collect_data(short_collect(300.0), 5), 0.02);
  const auto norm = fit_normalizer(d);
  for (int i = 0; i < 6; ++i) {
    INFO("channel " << i);
    CHECK(norm.stddev[i] > 1e-3);
    CHECK(norm.stddev[i] != 1.0);  // 1.0 is the zero-spread fallback
  }
  // Speed stays in a realistic envelope.
  CHECK(norm.mean[1] > 0.5);
  CHECK(norm.mean[1] < 3.6);
}

TEST_CASE("collected samples stay inside the workspace") {
  CollectConfig c = short_collect(120.0);
  const Dataset d = collect_data(c, 6);
  for (const auto& seg : d.segments) {
    for (const Sample& s : seg) {
      CHECK(std::abs(s.pose.x) <= c.workspace + 0.1);
      CHECK(std::abs(s.pose.y) <= c.workspace + 0.1);
    }
  }
}

TEST_CASE("decimation keeps every k-th sample with exact timestamps") {
  const Dataset d = collect_data(short_collect(5.0), 7);
  REQUIRE(d.dt == doctest::Approx(0.01));
  const Dataset half = decimate(d, 0.02);
  CHECK(half.dt == 0.02);
  REQUIRE(half.segments.size() == d.segments.size());
  for (std::size_t s = 0; s < d.segments.size(); ++s) {
    REQUIRE(half.segments[s].size() == (d.segments[s].size() + 1) / 2);
    for (std::size_t i = 0; i < half.segments[s].size(); ++i) {
      CHECK(same_samples(half.segments[s][i], d.segments[s][2 * i]));
    }
  }
  const Dataset same = decimate(half, 0.02);
  REQUIRE(same.segments.size() == half.segments.size());
  for (std::size_t i = 0; i < same.segments[0].size(); ++i) {
    CHECK(same_samples(same.segments[0][i], half.segments[0][i]));
  }
}

TEST_CASE("120 Hz data cannot be decimated to 20 ms") {
  Dataset d;
  d.dt = 1.0 / 120.0;
  d.segments.push_back(std::vector<Sample>(10));
  CHECK_THROWS_AS(decimate(d, 0.02), std::invalid_argument);
}

TEST_CASE("windows respect segments, length and stride") {
  Dataset d;
  d.dt = 0.02;
  d.segments.push_back(std::vector<Sample>(250));
  d.segments.push_back(std::vector<Sample>(50));
  for (std::size_t i = 0; i < 250; ++i) d.segments[0][i].time = 0.02 * static_cast<double>(i);
  const auto w = make_windows(d, 101, 10);
  CHECK(w.size() == 15);  // starts 0..140 in the first segment, none in the second
  CHECK(w[3].samples.front().time == d.segments[0][30].time);
  CHECK(w[3].size() == 101);
  CHECK_THROWS_AS(make_windows(d, 1, 1), std::invalid_argument);
}

TEST_CASE("training is deterministic and reduces the loss") {
  const Dataset d = decimate(collect_data(short_collect(60.0), 8), 0.02);
  const auto windows = make_windows(d, 26, 25);
  REQUIRE(windows.size() > 20);
  const auto norm = fit_normalizer(d);
  TrainConfig tc;
  tc.epochs = 4;
  const TrainResult a = train_offline(windows, norm, tc, 11);
  const TrainResult b = train_offline(windows, norm, tc, 11);
  CHECK(a.model.params == b.model.params);
  REQUIRE(a.curve.size() == 5);
  CHECK(a.curve.back() < a.curve.front());
  CHECK(mean_loss(a.model, windows) < a.curve.front());
  // The stored normalizer is the one passed in.
  CHECK(a.model.normalizer.mean == norm.mean);
}

TEST_CASE("curriculum stages still report full-window losses") {
  const Dataset d = decimate(collect_data(short_collect(40.0), 9), 0.02);
  const auto windows = make_windows(d, 51, 25);
  const auto norm = fit_normalizer(d);
  TrainConfig tc;
  tc.epochs = 3;
  tc.curriculum = {11, 26};
  tc.curriculum_epochs = 1;
  const TrainResult r = train_offline(windows, norm, tc, 12);
  REQUIRE(r.curve.size() == 4);

  TrainConfig first = tc;
  first.epochs = 1;
  const TrainResult one = train_offline(windows, norm, first, 12);
  CHECK(r.curve[1] == doctest::Approx(mean_loss(one.model, windows)).epsilon(1e-12));
}

TEST_CASE("empty training set is rejected") {
  CHECK_THROWS_AS(train_offline({}, cmaml::nn::InputNormalizer::identity(6), TrainConfig{}, 1), std::invalid_argument);
}
