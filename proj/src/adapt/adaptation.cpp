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

#include "cmaml/adapt/adaptation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cmaml::adapt {

using model::DynamicsModel;
using model::SampleWindow;

std::string_view to_string(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::kFixed: return "fixed";
    case AdaptMode::kGd: return "gd";
    case AdaptMode::kCmaml: return "cmaml";
  }
  return "?";
}

std::string_view to_string(MetaGradientMode mode) {
  return mode == MetaGradientMode::kExactHvp ? "exact-hvp" : "first-order";
}

AdaptMode parse_adapt_mode(std::string_view name) {
  if (name == "fixed") return AdaptMode::kFixed;
  if (name == "gd") return AdaptMode::kGd;
  if (name == "cmaml") return AdaptMode::kCmaml;
  throw std::invalid_argument("unknown adaptation mode '" + std::string(name) + "' (fixed, gd, cmaml)");
}

MetaGradientMode parse_meta_gradient_mode(std::string_view name) {
  if (name == "exact-hvp") return MetaGradientMode::kExactHvp;
  if (name == "first-order") return MetaGradientMode::kFirstOrder;
  throw std::invalid_argument("unknown meta-gradient mode '" + std::string(name) + "' (exact-hvp, first-order)");
}

namespace {

int integer_ratio(double num, double den, const char* what) {
  const double ratio = num / den;
  const long rounded = std::lround(ratio);
  if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > 1e-9) {
    throw std::invalid_argument(std::string("AdaptConfig: ") + what);
  }
  return static_cast<int>(rounded);
}

}  // namespace

void AdaptConfig::validate() const {
  if (!(control_period > 0.0)) throw std::invalid_argument("AdaptConfig: control period must be positive");
  integer_ratio(update_period, control_period, "update period must be a multiple of the control period");
  integer_ratio(meta_period, update_period, "meta period must be a multiple of the update period");
  if (window < 2) throw std::invalid_argument("AdaptConfig: window needs at least 2 samples");
  if (!(fast_lr > 0.0) || !(meta_lr > 0.0)) throw std::invalid_argument("AdaptConfig: learning rates must be positive");
  if (train_capacity != 1 || test_capacity != 1) throw std::invalid_argument("AdaptConfig: buffer capacities must be 1");
  if (!(keep_probability >= 0.0 && keep_probability <= 1.0)) {
    throw std::invalid_argument("AdaptConfig: keep probability must be in [0, 1]");
  }
  if (!(grad_clip > 0.0)) throw std::invalid_argument("AdaptConfig: gradient clip must be positive");
  if (!(hvp_eps > 0.0)) throw std::invalid_argument("AdaptConfig: hvp eps must be positive");
}

int AdaptConfig::steps_per_update() const {
  return integer_ratio(update_period, control_period, "update period must be a multiple of the control period");
}

int AdaptConfig::updates_per_meta() const {
  return integer_ratio(meta_period, update_period, "meta period must be a multiple of the update period");
}

AdaptState make_adapt_state(const DynamicsModel& initial, std::uint64_t seed) {
  AdaptState a;
  a.meta = initial;
  a.fast = initial;
  a.adam = nn::AdamState(static_cast<Eigen::Index>(initial.params.size()));
  a.rng.seed(seed);
  return a;
}

double clip_factor(const nn::Vector& grad, double max_norm) {
  const double norm = grad.norm();
  return norm > max_norm ? max_norm / norm : 1.0;
}

namespace {

nn::LossGradFn window_objective(const DynamicsModel& m, const SampleWindow& w) {
  return [m, &w](const nn::Vector& theta, nn::Vector& grad) {
    const DynamicsModel at = m.with_params(nn::MlpParams(m.params.shape(), theta));
    model::LossAndGradient lg = model::window_loss_and_grad(at, w);
    grad = std::move(lg.grad);
    return lg.loss;
  };
}

nn::MlpParams clipped_step(const DynamicsModel& m, const SampleWindow& w, double eta, double max_norm,
                           double* grad_norm) {
  nn::Vector g = model::window_loss_and_grad(m, w).grad;
  const double norm = nn::clip_by_norm(g, max_norm);
  if (grad_norm) *grad_norm = norm;
  return nn::sgd_step(m.params, g, eta);
}

}  // namespace

nn::MlpParams fast_adapt(const DynamicsModel& m, const SampleWindow& train, double eta, double max_norm,
                         double* grad_norm) {
  return clipped_step(m, train, eta, max_norm, grad_norm);
}

nn::MlpParams fine_tune(const DynamicsModel& fast, const SampleWindow& window, double eta, double max_norm,
                        double* grad_norm) {
  return clipped_step(fast, window, eta, max_norm, grad_norm);
}

MetaGradient meta_gradient(const nn::Vector& theta, const nn::LossGradFn& train, const nn::LossGradFn& test,
                           double eta, MetaGradientMode mode, double max_norm, double hvp_eps) {
  if (!(eta >= 0.0)) throw std::invalid_argument("meta_gradient: eta must be non-negative");
  MetaGradient out;
  nn::Vector g_train;
  train(theta, g_train);
  out.inner_grad_norm = g_train.norm();
  const double c = clip_factor(g_train, max_norm);
  const nn::Vector theta_prime = theta - (eta * c) * g_train;

  nn::Vector g_test;
  out.test_loss = test(theta_prime, g_test);
  out.grad = g_test;
  if (mode == MetaGradientMode::kExactHvp && eta > 0.0 && g_test.norm() >= 1e-12) {
    out.grad -= (eta * c) * nn::hvp(theta, train, g_test, hvp_eps);
  }
  return out;
}

MetaUpdateResult meta_update(const DynamicsModel& meta, const SampleWindow& train, const SampleWindow& test,
                             const nn::AdamState& adam, const AdaptConfig& cfg) {
  MetaGradient mg = meta_gradient(meta.params.values(), window_objective(meta, train), window_objective(meta, test),
                                  cfg.fast_lr, cfg.meta_gradient, cfg.grad_clip, cfg.hvp_eps);
  MetaUpdateResult res;
  res.grad_norm = nn::clip_by_norm(mg.grad, cfg.grad_clip);
  nn::AdamResult step = nn::adam_step(meta.params.values(), mg.grad, adam, cfg.meta_lr);
  res.params = nn::MlpParams(meta.params.shape(), std::move(step.params));
  res.adam = std::move(step.state);
  return res;
}

void buffer_insert(AdaptState& a, const SampleWindow& window, const AdaptConfig& cfg) {
  if (!a.train) {
    a.train = window;
    return;
  }
  if (!a.test) {
    a.test = window;
    return;
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(a.rng);
  if (u < cfg.keep_probability) return;
  const double split = cfg.keep_probability + 0.5 * (1.0 - cfg.keep_probability);
  if (u < split) {
    a.train = window;
  } else {
    a.test = window;
  }
}

AdaptStep on_sample(const AdaptState& a, const SampleWindow& window, bool boundary, const AdaptConfig& cfg) {
  AdaptStep out{a, {}};
  const double time = window.samples.empty() ? 0.0 : window.samples.back().time;
  auto event = [&](std::string name) -> AdaptEvent& {
    out.events.push_back({time, cfg.mode, std::move(name), 0.0, 0.0, 0.0});
    return out.events.back();
  };
  if (cfg.mode == AdaptMode::kFixed) return out;
  if (!window.valid() || window.size() != static_cast<std::size_t>(cfg.window)) {
    event("skipped");
    return out;
  }
  AdaptState& s = out.state;

  auto do_fine_tune = [&] {
    AdaptEvent& e = event("fine_tune");
    e.loss_before = model::rollout_loss(s.fast, window);
    s.fast.params = fine_tune(s.fast, window, cfg.fast_lr, cfg.grad_clip, &e.grad_norm);
    e.loss_after = model::rollout_loss(s.fast, window);
  };
  auto do_meta = [&](const char* name) {
    if (!s.train || !s.test) return;
    AdaptEvent& e = event(name);
    e.loss_before = model::rollout_loss(s.meta, window);
    MetaUpdateResult r = meta_update(s.meta, *s.train, *s.test, s.adam, cfg);
    s.meta.params = std::move(r.params);
    s.adam = std::move(r.adam);
    e.grad_norm = r.grad_norm;
    e.loss_after = model::rollout_loss(s.meta, window);
    s.updates_since_meta = 0;
  };

  if (cfg.mode == AdaptMode::kGd) {
    do_fine_tune();
    return out;
  }

  if (boundary) {
    do_meta("meta_boundary");
    s.train.reset();
    s.test.reset();
    s.updates_since_meta = 0;
    AdaptEvent& e = event("reset");
    e.loss_before = model::rollout_loss(s.fast, window);
    s.fast.params = fast_adapt(s.meta, window, cfg.fast_lr, cfg.grad_clip, &e.grad_norm);
    e.loss_after = model::rollout_loss(s.fast, window);
    return out;
  }

  buffer_insert(s, window, cfg);
  do_fine_tune();
  if (++s.updates_since_meta >= cfg.updates_per_meta()) {
    do_meta("meta_periodic");
    s.updates_since_meta = 0;
  }
  return out;
}

void write_adapt_log_header(std::ostream& out) { out << "time,mode,event,loss_before,loss_after,grad_norm\n"; }

void write_adapt_log(std::ostream& out, const std::vector<AdaptEvent>& events) {
  char buf[256];
  for (const AdaptEvent& e : events) {
    std::snprintf(buf, sizeof buf, "%.17g,%s,%s,%.17g,%.17g,%.17g\n", e.time, std::string(to_string(e.mode)).c_str(),
                  e.event.c_str(), e.loss_before, e.loss_after, e.grad_norm);
    out << buf;
  }
}

}  // namespace cmaml::adapt
