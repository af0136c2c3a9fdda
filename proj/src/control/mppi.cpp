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

#include "cmaml/control/mppi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmaml::control {

using model::ControlInput;

void MppiConfig::validate() const {
  if (samples < 2) throw std::invalid_argument("MppiConfig: need at least 2 samples");
  if (horizon < 1) throw std::invalid_argument("MppiConfig: horizon must be positive");
  if (!(temperature > 0.0)) throw std::invalid_argument("MppiConfig: temperature must be positive");
  if (!(sigma_steer > 0.0) || !(sigma_accel > 0.0)) throw std::invalid_argument("MppiConfig: noise std must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("MppiConfig: dt must be positive");
  if (std::abs(horizon * dt - 2.0) > 1e-9) throw std::invalid_argument("MppiConfig: horizon * dt must be 2 s");
}

ControlSequence zero_sequence(const MppiConfig& cfg) { return ControlSequence(static_cast<std::size_t>(cfg.horizon)); }

double stage_cost(const model::VehicleState& s, const model::Pose& p, const track::Costmap& costmap,
                  const MppiConfig& cfg) {
  const double dv = s.vx - cfg.v_ref;
  return cfg.track_weight * track::track_cost(costmap, p.x, p.y) + cfg.speed_weight * dv * dv;
}

std::vector<double> softmin_weights(std::span<const double> costs, double lambda) {
  if (costs.empty()) throw std::invalid_argument("softmin_weights: empty cost vector");
  if (!(lambda > 0.0)) throw std::invalid_argument("softmin_weights: lambda must be positive");
  double lo = std::numeric_limits<double>::infinity();
  for (double c : costs) {
    if (std::isfinite(c)) lo = std::min(lo, c);
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("softmin_weights: no finite cost");
  std::vector<double> w(costs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (std::isfinite(costs[i])) w[i] = std::exp(-(costs[i] - lo) / lambda);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

Perturbations sample_perturbations(const MppiConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Perturbations noise(2 * cfg.horizon, cfg.samples);
  for (int k = 0; k < cfg.samples; ++k) {
    for (int h = 0; h < cfg.horizon; ++h) {
      noise(2 * h, k) = cfg.sigma_steer * gauss(rng);
      noise(2 * h + 1, k) = cfg.sigma_accel * gauss(rng);
    }
  }
  return noise;
}

ControlSequence weighted_update(const ControlSequence& prev, const Perturbations& noise,
                                std::span<const double> weights) {
  const auto horizon = static_cast<Eigen::Index>(prev.size());
  if (noise.rows() != 2 * horizon) throw std::invalid_argument("weighted_update: noise rows != 2 * horizon");
  if (noise.cols() != static_cast<Eigen::Index>(weights.size())) {
    throw std::invalid_argument("weighted_update: one weight per sample required");
  }
  std::vector<double> acc(static_cast<std::size_t>(2 * horizon), 0.0);
  for (Eigen::Index k = 0; k < noise.cols(); ++k) {
    const double w = weights[static_cast<std::size_t>(k)];
    if (w == 0.0) continue;
    for (Eigen::Index r = 0; r < noise.rows(); ++r) acc[static_cast<std::size_t>(r)] += w * noise(r, k);
  }
  ControlSequence out(prev.size());
  for (std::size_t h = 0; h < prev.size(); ++h) out[h] = {prev[h].u1 + acc[2 * h], prev[h].u2 + acc[2 * h + 1]};
  return out;
}

MppiResult mppi_update(const ControlSequence& prev, const MppiConfig& cfg, std::mt19937_64& rng,
                       const SequenceScorer& score) {
  cfg.validate();
  if (prev.size() != static_cast<std::size_t>(cfg.horizon)) throw std::invalid_argument("mppi: sequence length != horizon");
  for (const ControlInput& u : prev) {
    if (!std::isfinite(u.u1) || !std::isfinite(u.u2)) throw std::invalid_argument("mppi: non-finite control sequence");
  }
  const Perturbations noise = sample_perturbations(cfg, rng);
  const std::vector<double> costs = score(prev, noise);
  if (costs.size() != static_cast<std::size_t>(cfg.samples)) throw std::logic_error("mppi: scorer returned wrong count");

  MppiResult res;
  MppiTelemetry& tel = res.telemetry;
  tel.min_cost = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int finite = 0;
  for (double c : costs) {
    if (!std::isfinite(c)) {
      ++tel.diverged;
      continue;
    }
    tel.min_cost = std::min(tel.min_cost, c);
    sum += c;
    ++finite;
  }
  if (finite == 0) throw MppiDivergenceError("mppi: every sampled rollout diverged");
  tel.mean_cost = sum / finite;

  const std::vector<double> w = softmin_weights(costs, cfg.temperature);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  tel.effective_samples = 1.0 / sq;

  res.optimized = weighted_update(prev, noise, w);
  if (cfg.clamp_sequence) {
    for (ControlInput& u : res.optimized) u = u.clamped();
  }
  res.command = res.optimized.front().clamped();
  tel.command = res.command;
  res.next.assign(res.optimized.begin() + 1, res.optimized.end());
  res.next.push_back(res.optimized.back());
  return res;
}

BatchRollout::BatchRollout(const model::DynamicsModel& model) {
  const nn::MlpParams& prm = model.params;
  const nn::Vector inv_std = model.normalizer.stddev.cwiseInverse();
  // W1 * ((x - mean) / std) + b1 = (W1 diag(1/std)) x + (b1 - W1 diag(1/std) mean)
  const nn::Matrix w1 = prm.w1() * inv_std.asDiagonal();
  const nn::Vector b1 = prm.b1() - w1 * model.normalizer.mean;
  w1_ = w1.cast<float>();
  b1_ = b1.cast<float>();
  w2_ = prm.w2().cast<float>();
  b2_ = prm.b2().cast<float>();
  w3_ = prm.w3().cast<float>();
  b3_ = prm.b3().cast<float>();
}

std::vector<double> BatchRollout::score(const model::VehicleState& s, const model::Pose& p,
                                        const ControlSequence& prev, const Perturbations& noise,
                                        const track::Costmap& costmap, const MppiConfig& cfg) {
  const Eigen::Index k = noise.cols();
  const auto dt = static_cast<float>(cfg.dt);
  x_.resize(6, k);
  x_.row(0).setConstant(static_cast<float>(s.phi));
  x_.row(1).setConstant(static_cast<float>(s.vx));
  x_.row(2).setConstant(static_cast<float>(s.vy));
  x_.row(3).setConstant(static_cast<float>(s.r));
  px_.setConstant(k, static_cast<float>(p.x));
  py_.setConstant(k, static_cast<float>(p.y));
  psi_.setConstant(k, static_cast<float>(p.psi));
  h1_.resize(w1_.rows(), k);
  h2_.resize(w2_.rows(), k);
  out_.resize(w3_.rows(), k);

  Eigen::ArrayXd total = Eigen::ArrayXd::Zero(k);
  for (std::size_t h = 0; h < prev.size(); ++h) {
    const auto r = static_cast<Eigen::Index>(2 * h);
    x_.row(4) = (noise.row(r).array() + prev[h].u1).cwiseMax(-1.0).cwiseMin(1.0).cast<float>().matrix();
    x_.row(5) = (noise.row(r + 1).array() + prev[h].u2).cwiseMax(-1.0).cwiseMin(1.0).cast<float>().matrix();

    h1_.noalias() = w1_ * x_;
    h1_.colwise() += b1_;
    h1_.array() = h1_.array().tanh();
    h2_.noalias() = w2_ * h1_;
    h2_.colwise() += b2_;
    h2_.array() = h2_.array().tanh();
    out_.noalias() = w3_ * h2_;
    out_.colwise() += b3_;

    // Pose advances with the pre-update state and heading.
    c_ = psi_.cos();
    sn_ = psi_.sin();
    const auto vx = x_.row(1).array().transpose();
    const auto vy = x_.row(2).array().transpose();
    px_ += (vx * c_ - vy * sn_) * dt;
    py_ += (vx * sn_ + vy * c_) * dt;
    psi_ += x_.row(3).array().transpose() * dt;
    x_.topRows(4) += out_ * dt;

    for (Eigen::Index i = 0; i < k; ++i) {
      const double dv = static_cast<double>(x_(1, i)) - cfg.v_ref;
      total[i] += cfg.track_weight * track::track_cost(costmap, px_[i], py_[i]) + cfg.speed_weight * dv * dv;
    }
  }
  std::vector<double> costs(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    costs[static_cast<std::size_t>(i)] =
        std::isfinite(total[i]) ? total[i] : std::numeric_limits<double>::infinity();
  }
  return costs;
}

MppiResult mppi_step(BatchRollout& engine, const model::VehicleState& s, const model::Pose& p,
                     const ControlSequence& prev, const track::Costmap& costmap, const MppiConfig& cfg,
                     std::mt19937_64& rng) {
  if (!s.finite() || !p.finite()) throw std::invalid_argument("mppi_step: non-finite state or pose");
  return mppi_update(prev, cfg, rng, [&](const ControlSequence& seq, const Perturbations& noise) {
    return engine.score(s, p, seq, noise, costmap, cfg);
  });
}

MppiResult mppi_step(const model::DynamicsModel& model, const model::VehicleState& s, const model::Pose& p,
                     const ControlSequence& prev, const track::Costmap& costmap, const MppiConfig& cfg,
                     std::mt19937_64& rng) {
  if (!model.params.all_finite()) throw std::invalid_argument("mppi_step: non-finite model parameters");
  BatchRollout engine(model);
  return mppi_step(engine, s, p, prev, costmap, cfg, rng);
}

}  // namespace cmaml::control
