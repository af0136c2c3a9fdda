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

#include "cmaml/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cmaml::nn {

Vector sgd_step(const Vector& params, const Vector& grad, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("sgd_step: learning rate must be positive");
  if (params.size() != grad.size()) throw std::invalid_argument("sgd_step: gradient length mismatch");
  return params - eta * grad;
}

MlpParams sgd_step(const MlpParams& params, const Gradient& grad, double eta) {
  return MlpParams(params.shape(), sgd_step(params.values(), grad, eta));
}

AdamResult adam_step(const Vector& params, const Vector& grad, AdamState state, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
  if (params.size() != grad.size()) throw std::invalid_argument("adam_step: gradient length mismatch");
  if (state.m.size() == 0 && state.v.size() == 0) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) throw std::invalid_argument("adam_step: state length mismatch");

  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  Vector next = params.array() - lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.epsilon);
  ++state.t;
  return {std::move(next), std::move(state)};
}

double clip_by_norm(Vector& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

}  // namespace cmaml::nn
