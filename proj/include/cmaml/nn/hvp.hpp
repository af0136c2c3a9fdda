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

#include <functional>

#include "cmaml/nn/mlp.hpp"

namespace cmaml::nn {

/// Loss over a fixed data set, evaluated at a flat parameter vector.
/// Returns the loss and writes its gradient into `grad`.
using LossGradFn = std::function<double(const Vector& params, Vector& grad)>;

inline constexpr double kDefaultHvpEps = 1e-4;

/// Hessian-vector product by central differences of the gradient along the
/// unit direction v/|v|, rescaled by |v|.
/// Throws std::invalid_argument if eps <= 0 or |v| < 1e-12.
Vector hvp(const Vector& params, const LossGradFn& loss, const Vector& v, double eps = kDefaultHvpEps);

}  // namespace cmaml::nn
