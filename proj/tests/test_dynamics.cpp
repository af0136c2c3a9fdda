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
#include <numbers>
#include <sstream>

#include "cmaml/model/dynamics.hpp"
#include "cmaml/model/trajectory_log.hpp"
#include "cmaml/nn/optim.hpp"
#include "model_fixtures.hpp"
#include "test_support.hpp"

using namespace cmaml::model;
using cmaml::nn::MlpParams;
using cmaml::nn::Vector;
using cmaml::testing::make_window;
using cmaml::testing::random_model;
using cmaml::testing::random_vector;


TEST_CASE("step") {
  SUBCASE("zero-weight model leaves the state unchanged") {
    const DynamicsModel zero;
    const VehicleState s{0.01, 2.5, -0.1, 0.7};
    CHECK(step(zero, s, {0.3, -0.4}, 0.02) == s);
  }
  SUBCASE("constant derivative output integrates with Euler") {
    DynamicsModel m;
    m.params.b3() << 0.0, 1.0, 0.0, 0.0;
    const VehicleState next = step(m, {0.0, 1.0, 0.0, 0.0}, {}, 0.02);
    CHECK(next.vx == doctest::Approx(1.02).epsilon(1e-15));
    CHECK(next.phi == 0.0);
  }
  SUBCASE("non-finite output raises a divergence error carrying the state") {
    DynamicsModel m;
    m.params.b3() << 0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0;
    CHECK_THROWS_AS(step(m, {}, {}, 0.02), DivergenceError);
    try {
      step(m, {}, {}, 0.02);
    } catch (const DivergenceError& e) {
      CHECK(std::isinf(e.state().vx));
    }
  }
  SUBCASE("dt must be positive") { CHECK_THROWS_AS(step(DynamicsModel{}, {}, {}, 0.0), std::invalid_argument); }
  SUBCASE("commands are clamped before entering the network") {
    std::mt19937_64 rng(4);
    const DynamicsModel m = random_model(rng);
    const VehicleState s{0.0, 2.0, 0.1, 0.3};
    CHECK(step(m, s, {3.0, -7.0}, 0.02) == step(m, s, {1.0, -1.0}, 0.02));
  }
}

TEST_CASE("propagate_pose") {
  SUBCASE("heading zero moves along X") {
    const Pose p = propagate_pose({}, {0.0, 1.0, 0.0, 0.0}, 0.02);
    CHECK(p.x == doctest::Approx(0.02));
    CHECK(p.y == 0.0);
    CHECK(p.psi == 0.0);
  }
  SUBCASE("heading pi/2 moves along Y") {
    const Pose p = propagate_pose({0.0, 0.0, std::numbers::pi / 2}, {0.0, 1.0, 0.0, 0.0}, 0.02);
    CHECK(std::abs(p.x) < 1e-17);
    CHECK(p.y == doctest::Approx(0.02));
  }
  SUBCASE("uses the pre-update heading") {
    const Pose p = propagate_pose({0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 10.0}, 0.1);
    CHECK(p.y == 0.0);
    CHECK(p.psi == doctest::Approx(1.0));
  }
  SUBCASE("constant vx = 1, r = 1 closes a unit circle") {
    const double dt = 0.02;
    const int steps = static_cast<int>(std::lround(2.0 * std::numbers::pi / dt));
    Pose p;
    double max_dist = 0.0;
    for (int k = 0; k < steps; ++k) {
      p = propagate_pose(p, {0.0, 1.0, 0.0, 1.0}, dt);
      max_dist = std::max(max_dist, std::hypot(p.x, p.y));
    }
    CHECK(std::hypot(p.x, p.y) < 0.05);
    // the diameter of the traced circle is 2 * vx / r
    CHECK(max_dist == doctest::Approx(2.0).epsilon(0.01));
  }
  SUBCASE("planar speed equals body speed") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector r = random_vector(6, rng, 2.0);
      const Pose p0{r[0], r[1], r[2]};
      const VehicleState s{0.0, r[3], r[4], r[5]};
      const Pose p1 = propagate_pose(p0, s, 0.02);
      const double planar = std::hypot(p1.x - p0.x, p1.y - p0.y) / 0.02;
      CHECK(std::abs(planar - std::hypot(s.vx, s.vy)) < 1e-12);
    }
  }
}

TEST_CASE("rollout") {
  std::mt19937_64 rng(12);
  const DynamicsModel m = random_model(rng);
  const VehicleState s0{0.0, 2.0, 0.1, 0.5};
  const Pose p0{1.0, -1.0, 0.3};

  SUBCASE("one input gives one point") {
    const std::vector<ControlInput> u{{0.1, 0.2}};
    CHECK(rollout(m, s0, p0, u, 0.02).size() == 1);
  }
  SUBCASE("zero-weight model with zero velocity holds the pose") {
    const std::vector<ControlInput> u(50, ControlInput{0.5, 0.5});
    for (const RolloutPoint& pt : rollout(DynamicsModel{}, {}, p0, u, 0.02)) CHECK(pt.pose == p0);
  }
  SUBCASE("a rollout equals successive single steps bit-for-bit") {
    std::vector<ControlInput> u;
    for (int k = 0; k < 30; ++k) u.push_back({std::sin(0.1 * k), std::cos(0.2 * k)});
    const auto pts = rollout(m, s0, p0, u, 0.02);
    VehicleState s = s0;
    Pose p = p0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const VehicleState next = step(m, s, u[k], 0.02);
      p = propagate_pose(p, s, 0.02);
      s = next;
      CHECK(pts[k].state == s);
      CHECK(pts[k].pose == p);
    }
  }
  SUBCASE("empty input list is rejected") {
    CHECK_THROWS_AS(rollout(m, s0, p0, std::vector<ControlInput>{}, 0.02), std::invalid_argument);
  }
}

TEST_CASE("rollout_loss") {
  std::mt19937_64 rng(13);
  const DynamicsModel truth = random_model(rng);

  SUBCASE("the generating model has zero loss") {
    const SampleWindow w = make_window(truth, 14, rng, 0.0);
    CHECK(rollout_loss(truth, w) == 0.0);
    const LossAndGradient lg = window_loss_and_grad(truth, w);
    CHECK(lg.loss == 0.0);
    CHECK(lg.grad.isZero(0.0));
  }
  SUBCASE("invariant to a rigid translation of every pose") {
    const DynamicsModel other = random_model(rng);
    SampleWindow w = make_window(truth, 14, rng, 0.01);
    const double before = rollout_loss(other, w);
    for (Sample& s : w.samples) {
      s.pose.x += 3.25;
      s.pose.y -= 1.5;
    }
    CHECK(rollout_loss(other, w) == doctest::Approx(before).epsilon(1e-9));
  }
  SUBCASE("non-negative and zero only for an exact match") {
    for (int trial = 0; trial < 20; ++trial) {
      const DynamicsModel other = random_model(rng);
      const SampleWindow w = make_window(truth, 14, rng, 0.0);
      CHECK(rollout_loss(other, w) > 0.0);
    }
  }
  SUBCASE("windows shorter than two samples or with gaps are rejected") {
    SampleWindow w = make_window(truth, 14, rng, 0.0);
    SampleWindow one = w;
    one.samples.resize(1);
    CHECK_THROWS_AS(rollout_loss(truth, one), std::invalid_argument);
    w.samples[5].time += 0.01;
    CHECK_THROWS_AS(rollout_loss(truth, w), std::invalid_argument);
  }
}

TEST_CASE("window_loss_and_grad") {
  std::mt19937_64 rng(14);
  SUBCASE("matches central finite differences of rollout_loss") {
    for (int trial = 0; trial < 20; ++trial) {
      const DynamicsModel truth = random_model(rng);
      const DynamicsModel model = random_model(rng);
      const SampleWindow w = make_window(truth, 6 + static_cast<std::size_t>(trial % 9), rng, 0.02);
      const LossAndGradient lg = window_loss_and_grad(model, w);
      CHECK(lg.loss == doctest::Approx(rollout_loss(model, w)).epsilon(1e-12));
      auto loss = [&](const Vector& th) { return rollout_loss(model.with_params(MlpParams(model.params.shape(), th)), w); };
      const Vector fd = cmaml::testing::fd_gradient(loss, model.params.values(), 1e-5);
      CHECK(cmaml::testing::worst_ratio(lg.grad, fd, 1e-5, 1e-9) <= 1.0);
    }
  }
  SUBCASE("one gradient step with eta = 0.1 decreases the window loss") {
    for (int trial = 0; trial < 10; ++trial) {
      const DynamicsModel truth = random_model(rng);
      const DynamicsModel model = random_model(rng);
      const SampleWindow w = make_window(truth, 14, rng, 0.0);
      const LossAndGradient lg = window_loss_and_grad(model, w);
      double eta = 0.1;
      double after = 0.0;
      for (int halvings = 0; halvings < 20; ++halvings, eta *= 0.5) {
        after = rollout_loss(model.with_params(cmaml::nn::sgd_step(model.params, lg.grad, eta)), w);
        if (after < lg.loss) break;
      }
      CHECK(after < lg.loss);
    }
  }
}

TEST_CASE("trajectory csv round-trips and splits on time gaps") {
  std::mt19937_64 rng(15);
  std::vector<Sample> log;
  for (int k = 0; k < 20; ++k) {
    const Vector v = random_vector(9, rng);
    const double t = (k < 10 ? k : k + 5) * 0.02;
    log.push_back({t, {v[0], v[1], v[2], v[3]}, {v[4], v[5], v[6]}, {v[7], v[8]}, k % 3});
  }
  std::stringstream buf;
  write_trajectory_csv(buf, log);
  const std::vector<Sample> back = read_trajectory_csv(buf);
  REQUIRE(back.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(back[i].time == log[i].time);
    CHECK(back[i].state == log[i].state);
    CHECK(back[i].pose == log[i].pose);
    CHECK(back[i].input == log[i].input);
    CHECK(back[i].surface == log[i].surface);
  }
  const auto segments = split_segments(back, 0.02);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].size() == 10);
  const SampleWindow w = window_ending_at(segments[1], 9, 4, 0.02);
  CHECK(w.size() == 4);
  CHECK(w.samples.back().time == segments[1][9].time);
  CHECK(w.valid());
}

TEST_CASE("batch_loss_and_grad equals the mean of per-window results") {
  std::mt19937_64 rng(31);
  const DynamicsModel truth = random_model(rng);
  const DynamicsModel model = random_model(rng);
  auto check_batch = [&](const std::vector<SampleWindow>& ws) {
    std::vector<const SampleWindow*> ptrs;
    double loss = 0.0;
    Vector grad = Vector::Zero(1412);
    for (const auto& w : ws) {
      ptrs.push_back(&w);
      const LossAndGradient lg = window_loss_and_grad(model, w);
      loss += lg.loss / ws.size();
      grad += lg.grad / ws.size();
    }
    const LossAndGradient b = batch_loss_and_grad(model, ptrs);
    CHECK(b.loss == doctest::Approx(loss).epsilon(1e-12));
    CHECK(cmaml::testing::worst_ratio(b.grad, grad, 1e-9, 1e-12) <= 1.0);
  };
  SUBCASE("equal lengths (lockstep path)") {
    std::vector<SampleWindow> ws;
    for (int i = 0; i < 7; ++i) ws.push_back(make_window(truth, 25, rng, 0.02));
    check_batch(ws);
  }
  SUBCASE("mixed lengths") {
    std::vector<SampleWindow> ws;
    for (int i = 0; i < 5; ++i) ws.push_back(make_window(truth, 5 + 3 * i, rng, 0.02));
    check_batch(ws);
  }
  SUBCASE("empty batch") {
    CHECK_THROWS_AS(batch_loss_and_grad(model, std::span<const SampleWindow* const>{}), std::invalid_argument);
  }
}
