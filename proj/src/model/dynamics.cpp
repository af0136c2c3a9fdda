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

#include "cmaml/model/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace cmaml::model {

bool SampleWindow::valid() const {
  if (samples.size() < 2 || !(dt > 0.0)) return false;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (std::abs(samples[i].time - samples[i - 1].time - dt) > 1e-9) return false;
  }
  return true;
}

DynamicsModel DynamicsModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (!(ckpt.params.shape() == nn::kDynamicsShape)) {
    throw std::invalid_argument("DynamicsModel: checkpoint shape is not the 6-32-32-4 dynamics network");
  }
  return {ckpt.params, ckpt.normalizer};
}

nn::Vector network_input(const VehicleState& s, const ControlInput& u) {
  const ControlInput c = u.clamped();
  nn::Vector x(6);
  x << s.phi, s.vx, s.vy, s.r, c.u1, c.u2;
  return x;
}

namespace {

VehicleState add_scaled(const VehicleState& s, const nn::Vector& deriv, double dt) {
  return {s.phi + deriv[0] * dt, s.vx + deriv[1] * dt, s.vy + deriv[2] * dt, s.r + deriv[3] * dt};
}

void require_finite(const VehicleState& next) {
  if (!next.finite()) {
    std::ostringstream msg;
    msg << "learned model diverged: state (" << next.phi << ", " << next.vx << ", " << next.vy << ", " << next.r
        << ")";
    throw DivergenceError(msg.str(), next);
  }
}

void require_window(const SampleWindow& window) {
  if (window.samples.size() < 2) throw std::invalid_argument("rollout_loss: window needs at least 2 samples");
  if (!window.valid()) throw std::invalid_argument("rollout_loss: window timestamps are not spaced by dt");
}

}  // namespace

VehicleState step(const DynamicsModel& model, const VehicleState& s, const ControlInput& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const nn::Vector deriv = nn::forward(model.params, model.normalizer.apply(network_input(s, u)));
  const VehicleState next = add_scaled(s, deriv, dt);
  require_finite(next);
  return next;
}

Pose propagate_pose(const Pose& p, const VehicleState& s, double dt) {
  const double c = std::cos(p.psi);
  const double sn = std::sin(p.psi);
  return {p.x + (s.vx * c - s.vy * sn) * dt, p.y + (s.vx * sn + s.vy * c) * dt, p.psi + s.r * dt};
}

std::vector<RolloutPoint> rollout(const DynamicsModel& model, const VehicleState& s0, const Pose& p0,
                                  std::span<const ControlInput> inputs, double dt) {
  if (inputs.empty()) throw std::invalid_argument("rollout: empty input sequence");
  std::vector<RolloutPoint> out;
  out.reserve(inputs.size());
  VehicleState s = s0;
  Pose p = p0;
  for (const ControlInput& u : inputs) {
    const VehicleState next = step(model, s, u, dt);
    p = propagate_pose(p, s, dt);
    s = next;
    out.push_back({s, p});
  }
  return out;
}

double rollout_loss(const DynamicsModel& model, const SampleWindow& window) {
  require_window(window);
  const auto& w = window.samples;
  VehicleState s = w.front().state;
  Pose p = w.front().pose;
  double loss = 0.0;
  for (std::size_t t = 1; t < w.size(); ++t) {
    const VehicleState next = step(model, s, w[t - 1].input, window.dt);
    p = propagate_pose(p, s, window.dt);
    s = next;
    const double ex = p.x - w[t].pose.x;
    const double ey = p.y - w[t].pose.y;
    const double ephi = s.phi - w[t].state.phi;
    const double epsi = p.psi - w[t].pose.psi;
    loss += ex * ex + ey * ey + ephi * ephi + epsi * epsi;
  }
  return loss;
}

LossAndGradient window_loss_and_grad(const DynamicsModel& model, const SampleWindow& window) {
  require_window(window);
  const auto& w = window.samples;
  const double dt = window.dt;
  const std::size_t n = w.size();

  std::vector<VehicleState> states(n);
  std::vector<Pose> poses(n);
  std::vector<nn::ForwardCache> caches(n - 1);
  states[0] = w[0].state;
  poses[0] = w[0].pose;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    caches[t] = nn::forward_cached(model.params, model.normalizer.apply(network_input(states[t], w[t].input)));
    states[t + 1] = add_scaled(states[t], caches[t].output, dt);
    require_finite(states[t + 1]);
    poses[t + 1] = propagate_pose(poses[t], states[t], dt);
  }

  LossAndGradient result{0.0, nn::Gradient::Zero(static_cast<Eigen::Index>(model.params.size()))};
  // Residuals of the loss terms, index t = 1..n-1.
  std::vector<Eigen::Vector4d> residual(n, Eigen::Vector4d::Zero());  // x, y, psi, phi
  for (std::size_t t = 1; t < n; ++t) {
    residual[t] << poses[t].x - w[t].pose.x, poses[t].y - w[t].pose.y, poses[t].psi - w[t].pose.psi,
        states[t].phi - w[t].state.phi;
    result.loss += residual[t].squaredNorm();
  }

  // Adjoints of the state (phi, vx, vy, r) and pose (x, y, psi) at index t+1.
  Eigen::Vector4d adj_s(2.0 * residual[n - 1][3], 0.0, 0.0, 0.0);
  Eigen::Vector3d adj_p(2.0 * residual[n - 1][0], 2.0 * residual[n - 1][1], 2.0 * residual[n - 1][2]);
  const nn::Vector& stddev = model.normalizer.stddev;
  for (std::size_t t = n - 1; t-- > 0;) {
    const nn::Vector dz = nn::backward_accumulate(model.params, caches[t], adj_s * dt, result.grad);
    Eigen::Vector4d prev_s = adj_s;
    for (int i = 0; i < 4; ++i) prev_s[i] += dz[i] / stddev[i];

    const VehicleState& s = states[t];
    const double c = std::cos(poses[t].psi);
    const double sn = std::sin(poses[t].psi);
    prev_s[1] += (c * adj_p[0] + sn * adj_p[1]) * dt;
    prev_s[2] += (-sn * adj_p[0] + c * adj_p[1]) * dt;
    prev_s[3] += adj_p[2] * dt;
    Eigen::Vector3d prev_p = adj_p;
    prev_p[2] += ((-s.vx * sn - s.vy * c) * adj_p[0] + (s.vx * c - s.vy * sn) * adj_p[1]) * dt;

    if (t >= 1) {
      prev_s[0] += 2.0 * residual[t][3];
      prev_p += 2.0 * residual[t].head<3>();
    }
    adj_s = prev_s;
    adj_p = prev_p;
  }
  return result;
}

namespace {

bool same_shape(std::span<const SampleWindow* const> windows) {
  for (const SampleWindow* w : windows) {
    if (w->size() != windows.front()->size() || w->dt != windows.front()->dt) return false;
  }
  return true;
}

// All windows advanced together, one network batch per time step.
LossAndGradient lockstep_loss_and_grad(const DynamicsModel& model, std::span<const SampleWindow* const> windows) {
  const auto b = static_cast<Eigen::Index>(windows.size());
  const std::size_t n = windows.front()->size();
  const double dt = windows.front()->dt;
  using Mat = Eigen::MatrixXd;

  std::vector<Mat> states(n, Mat(4, b));
  std::vector<Mat> poses(n, Mat(3, b));
  std::vector<nn::BatchCache> caches(n - 1);
  for (Eigen::Index k = 0; k < b; ++k) {
    const Sample& s0 = windows[static_cast<std::size_t>(k)]->samples.front();
    states[0].col(k) << s0.state.phi, s0.state.vx, s0.state.vy, s0.state.r;
    poses[0].col(k) << s0.pose.x, s0.pose.y, s0.pose.psi;
  }
  const nn::Vector inv_std = model.normalizer.stddev.cwiseInverse();
  Mat input(6, b);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    input.topRows(4) = states[t];
    for (Eigen::Index k = 0; k < b; ++k) {
      const ControlInput u = windows[static_cast<std::size_t>(k)]->samples[t].input.clamped();
      input(4, k) = u.u1;
      input(5, k) = u.u2;
    }
    input = (input.colwise() - model.normalizer.mean).array().colwise() * inv_std.array();
    caches[t] = nn::forward_batch_cached(model.params, input);
    states[t + 1] = states[t] + caches[t].output * dt;
    if (!states[t + 1].allFinite()) {
      for (Eigen::Index k = 0; k < b; ++k) {
        const auto c = states[t + 1].col(k);
        if (!c.allFinite()) require_finite({c[0], c[1], c[2], c[3]});
      }
    }
    const Eigen::ArrayXd c = poses[t].row(2).array().cos().transpose();
    const Eigen::ArrayXd sn = poses[t].row(2).array().sin().transpose();
    const Eigen::ArrayXd vx = states[t].row(1).transpose();
    const Eigen::ArrayXd vy = states[t].row(2).transpose();
    poses[t + 1].row(0) = poses[t].row(0) + ((vx * c - vy * sn) * dt).matrix().transpose();
    poses[t + 1].row(1) = poses[t].row(1) + ((vx * sn + vy * c) * dt).matrix().transpose();
    poses[t + 1].row(2) = poses[t].row(2) + states[t].row(3) * dt;
  }

  LossAndGradient result{0.0, nn::Gradient::Zero(static_cast<Eigen::Index>(model.params.size()))};
  // Residual rows: x, y, psi, phi.
  std::vector<Mat> residual(n, Mat::Zero(4, b));
  for (std::size_t t = 1; t < n; ++t) {
    for (Eigen::Index k = 0; k < b; ++k) {
      const Sample& m = windows[static_cast<std::size_t>(k)]->samples[t];
      residual[t].col(k) << poses[t](0, k) - m.pose.x, poses[t](1, k) - m.pose.y, poses[t](2, k) - m.pose.psi,
          states[t](0, k) - m.state.phi;
    }
    result.loss += residual[t].squaredNorm();
  }

  Mat adj_s = Mat::Zero(4, b);
  adj_s.row(0) = 2.0 * residual[n - 1].row(3);
  Mat adj_p = 2.0 * residual[n - 1].topRows(3);
  for (std::size_t t = n - 1; t-- > 0;) {
    const Mat dz = nn::backward_batch_accumulate(model.params, caches[t], adj_s * dt, result.grad);
    Mat prev_s = adj_s + (dz.topRows(4).array().colwise() * inv_std.head(4).array()).matrix();
    const Eigen::ArrayXd c = poses[t].row(2).array().cos().transpose();
    const Eigen::ArrayXd sn = poses[t].row(2).array().sin().transpose();
    const Eigen::ArrayXd vx = states[t].row(1).transpose();
    const Eigen::ArrayXd vy = states[t].row(2).transpose();
    const Eigen::ArrayXd ax = adj_p.row(0).transpose();
    const Eigen::ArrayXd ay = adj_p.row(1).transpose();
    prev_s.row(1) += ((c * ax + sn * ay) * dt).matrix().transpose();
    prev_s.row(2) += ((-sn * ax + c * ay) * dt).matrix().transpose();
    prev_s.row(3) += adj_p.row(2) * dt;
    Mat prev_p = adj_p;
    prev_p.row(2) += ((((-vx * sn - vy * c) * ax) + ((vx * c - vy * sn) * ay)) * dt).matrix().transpose();
    if (t >= 1) {
      prev_s.row(0) += 2.0 * residual[t].row(3);
      prev_p += 2.0 * residual[t].topRows(3);
    }
    adj_s = std::move(prev_s);
    adj_p = std::move(prev_p);
  }
  return result;
}

}  // namespace

LossAndGradient batch_loss_and_grad(const DynamicsModel& model, std::span<const SampleWindow* const> windows) {
  if (windows.empty()) throw std::invalid_argument("batch_loss_and_grad: empty batch");
  LossAndGradient total;
  if (same_shape(windows)) {
    for (const SampleWindow* w : windows) require_window(*w);
    total = lockstep_loss_and_grad(model, windows);
  } else {
    total = {0.0, nn::Gradient::Zero(static_cast<Eigen::Index>(model.params.size()))};
    for (const SampleWindow* w : windows) {
      const LossAndGradient lg = window_loss_and_grad(model, *w);
      total.loss += lg.loss;
      total.grad += lg.grad;
    }
  }
  const double inv = 1.0 / static_cast<double>(windows.size());
  total.loss *= inv;
  total.grad *= inv;
  return total;
}

}  // namespace cmaml::model
