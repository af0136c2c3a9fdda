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

#include "cmaml/nn/mlp.hpp"

namespace cmaml::nn {

/// Plain gradient descent: params - eta * grad.
Vector sgd_step(const Vector& params, const Vector& grad, double eta);
MlpParams sgd_step(const MlpParams& params, const Gradient& grad, double eta);

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 1;  // index of the next step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

struct AdamResult {
  Vector params;
  AdamState state;
};

/// One bias-corrected Adam step. The state is taken by value; callers keep
/// the returned copy.
AdamResult adam_step(const Vector& params, const Vector& grad, AdamState state, double lr);

/// Rescales `grad` so its Euclidean norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_by_norm(Vector& grad, double max_norm);

}  // namespace cmaml::nn
