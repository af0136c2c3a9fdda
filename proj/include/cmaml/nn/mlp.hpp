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

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace cmaml::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Gradient of a scalar loss with respect to every flat coefficient.
using Gradient = Eigen::VectorXd;

/// Layer widths of a two-hidden-layer tanh network with a linear output.
struct MlpShape {
  int input = 6;
  int hidden1 = 32;
  int hidden2 = 32;
  int output = 4;

  [[nodiscard]] std::size_t param_count() const;
  bool operator==(const MlpShape&) const = default;
};

/// Shape of the vehicle dynamics network: [phi, vx, vy, r, u1, u2] -> state derivative.
inline constexpr MlpShape kDynamicsShape{6, 32, 32, 4};

/// Offsets of each block inside the flat coefficient array.
/// Weight blocks are column-major (rows = fan_out, cols = fan_in).
struct MlpLayout {
  std::size_t w1, b1, w2, b2, w3, b3, total;
  explicit MlpLayout(const MlpShape& shape);
};

/// Flat parameter container: W1, b1, W2, b2, W3, b3 stored back to back.
class MlpParams {
 public:
  MlpParams() : MlpParams(kDynamicsShape) {}
  explicit MlpParams(const MlpShape& shape);
  MlpParams(const MlpShape& shape, Vector values);

  [[nodiscard]] const MlpShape& shape() const { return shape_; }
  [[nodiscard]] const Vector& values() const { return values_; }
  [[nodiscard]] Vector& values() { return values_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  [[nodiscard]] bool all_finite() const { return values_.allFinite(); }

  [[nodiscard]] Eigen::Map<const Matrix> w1() const;
  [[nodiscard]] Eigen::Map<const Vector> b1() const;
  [[nodiscard]] Eigen::Map<const Matrix> w2() const;
  [[nodiscard]] Eigen::Map<const Vector> b2() const;
  [[nodiscard]] Eigen::Map<const Matrix> w3() const;
  [[nodiscard]] Eigen::Map<const Vector> b3() const;

  Eigen::Map<Matrix> w1();
  Eigen::Map<Vector> b1();
  Eigen::Map<Matrix> w2();
  Eigen::Map<Vector> b2();
  Eigen::Map<Matrix> w3();
  Eigen::Map<Vector> b3();

  bool operator==(const MlpParams& other) const;

 private:
  MlpShape shape_;
  Vector values_;
};

/// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
MlpParams init_params(const MlpShape& shape, std::mt19937_64& rng);

/// Hidden activations kept from a forward pass, reused by backward().
struct ForwardCache {
  Vector input;
  Vector hidden1;  // post-tanh
  Vector hidden2;  // post-tanh
  Vector output;
};

Vector forward(const MlpParams& params, const Eigen::Ref<const Vector>& input);
ForwardCache forward_cached(const MlpParams& params, const Eigen::Ref<const Vector>& input);

/// Column-batched forward pass; each column of `inputs` is one sample.
Matrix forward_batch(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs);

/// Accumulates d(output_grad . f(input))/d(params) into `param_grad` and
/// returns the gradient with respect to the input.
Vector backward_accumulate(const MlpParams& params, const ForwardCache& cache,
                           const Eigen::Ref<const Vector>& output_grad,
                           Eigen::Ref<Vector> param_grad);

/// Column-batched activations, one column per sample.
struct BatchCache {
  Matrix input;
  Matrix hidden1;
  Matrix hidden2;
  Matrix output;
};

BatchCache forward_batch_cached(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs);

/// Batched form of backward_accumulate: sums the parameter gradient of
/// every column into `param_grad` and returns the per-column input gradients.
Matrix backward_batch_accumulate(const MlpParams& params, const BatchCache& cache,
                                 const Eigen::Ref<const Matrix>& output_grads, Eigen::Ref<Vector> param_grad);

struct BackwardResult {
  Gradient params;
  Matrix inputs;  // one column per sample
};

/// Gradient of sum_i output_grads[:, i] . f(inputs[:, i]) with respect to the
/// parameters, plus per-sample input gradients.
/// Throws std::invalid_argument on an empty batch or inconsistent shapes.
BackwardResult backward(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs,
                        const Eigen::Ref<const Matrix>& output_grads);

}  // namespace cmaml::nn
