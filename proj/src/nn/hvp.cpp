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

#include "cmaml/nn/hvp.hpp"

#include <stdexcept>

namespace cmaml::nn {

Vector hvp(const Vector& params, const LossGradFn& loss, const Vector& v, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("hvp: eps must be positive");
  if (v.size() != params.size()) throw std::invalid_argument("hvp: direction length mismatch");
  const double norm = v.norm();
  if (!(norm >= 1e-12)) throw std::invalid_argument("hvp: direction norm below 1e-12");
  const Vector unit = v / norm;
  Vector g_plus(params.size());
  Vector g_minus(params.size());
  loss(params + eps * unit, g_plus);
  loss(params - eps * unit, g_minus);
  return (g_plus - g_minus) * (norm / (2.0 * eps));
}

}  // namespace cmaml::nn
