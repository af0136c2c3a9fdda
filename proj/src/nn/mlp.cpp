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

#include "cmaml/nn/mlp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace cmaml::nn {

std::size_t MlpShape::param_count() const { return MlpLayout(*this).total; }

MlpLayout::MlpLayout(const MlpShape& s) {
  if (s.input <= 0 || s.hidden1 <= 0 || s.hidden2 <= 0 || s.output <= 0) {
    throw std::invalid_argument("MlpShape: all layer widths must be positive");
  }
  const auto in = static_cast<std::size_t>(s.input);
  const auto h1 = static_cast<std::size_t>(s.hidden1);
  const auto h2 = static_cast<std::size_t>(s.hidden2);
  const auto out = static_cast<std::size_t>(s.output);
  w1 = 0;
  b1 = w1 + h1 * in;
  w2 = b1 + h1;
  b2 = w2 + h2 * h1;
  w3 = b2 + h2;
  b3 = w3 + out * h2;
  total = b3 + out;
}

MlpParams::MlpParams(const MlpShape& shape)
    : shape_(shape), values_(Vector::Zero(static_cast<Eigen::Index>(shape.param_count()))) {}

MlpParams::MlpParams(const MlpShape& shape, Vector values) : shape_(shape), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != shape_.param_count()) {
    std::ostringstream msg;
    msg << "MlpParams: expected " << shape_.param_count() << " coefficients, got " << values_.size();
    throw std::invalid_argument(msg.str());
  }
}

namespace {
template <typename Ptr>
auto block_matrix(Ptr base, std::size_t offset, int rows, int cols) {
  return std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, Eigen::Map<const Matrix>,
                            Eigen::Map<Matrix>>(base + offset, rows, cols);
}
template <typename Ptr>
auto block_vector(Ptr base, std::size_t offset, int rows) {
  return std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, Eigen::Map<const Vector>,
                            Eigen::Map<Vector>>(base + offset, rows);
}
}  // namespace

Eigen::Map<const Matrix> MlpParams::w1() const {
  return block_matrix(values_.data(), MlpLayout(shape_).w1, shape_.hidden1, shape_.input);
}
Eigen::Map<const Vector> MlpParams::b1() const {
  return block_vector(values_.data(), MlpLayout(shape_).b1, shape_.hidden1);
}
Eigen::Map<const Matrix> MlpParams::w2() const {
  return block_matrix(values_.data(), MlpLayout(shape_).w2, shape_.hidden2, shape_.hidden1);
}
Eigen::Map<const Vector> MlpParams::b2() const {
  return block_vector(values_.data(), MlpLayout(shape_).b2, shape_.hidden2);
}
Eigen::Map<const Matrix> MlpParams::w3() const {
  return block_matrix(values_.data(), MlpLayout(shape_).w3, shape_.output, shape_.hidden2);
}
Eigen::Map<const Vector> MlpParams::b3() const {
  return block_vector(values_.data(), MlpLayout(shape_).b3, shape_.output);
}
Eigen::Map<Matrix> MlpParams::w1() {
  return block_matrix(values_.data(), MlpLayout(shape_).w1, shape_.hidden1, shape_.input);
}
Eigen::Map<Vector> MlpParams::b1() { return block_vector(values_.data(), MlpLayout(shape_).b1, shape_.hidden1); }
Eigen::Map<Matrix> MlpParams::w2() {
  return block_matrix(values_.data(), MlpLayout(shape_).w2, shape_.hidden2, shape_.hidden1);
}
Eigen::Map<Vector> MlpParams::b2() { return block_vector(values_.data(), MlpLayout(shape_).b2, shape_.hidden2); }
Eigen::Map<Matrix> MlpParams::w3() {
  return block_matrix(values_.data(), MlpLayout(shape_).w3, shape_.output, shape_.hidden2);
}
Eigen::Map<Vector> MlpParams::b3() { return block_vector(values_.data(), MlpLayout(shape_).b3, shape_.output); }

bool MlpParams::operator==(const MlpParams& other) const {
  return shape_ == other.shape_ && values_.size() == other.values_.size() &&
         (values_.array() == other.values_.array()).all();
}

MlpParams init_params(const MlpShape& shape, std::mt19937_64& rng) {
  MlpParams params(shape);
  auto fill = [&rng](Eigen::Map<Matrix> w, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  };
  fill(params.w1(), shape.input);
  fill(params.w2(), shape.hidden1);
  fill(params.w3(), shape.hidden2);
  return params;
}

ForwardCache forward_cached(const MlpParams& params, const Eigen::Ref<const Vector>& input) {
  if (input.size() != params.shape().input) {
    throw std::invalid_argument("forward: input size does not match network shape");
  }
  ForwardCache c;
  c.input = input;
  c.hidden1 = (params.w1() * input + params.b1()).array().tanh().matrix();
  c.hidden2 = (params.w2() * c.hidden1 + params.b2()).array().tanh().matrix();
  c.output = params.w3() * c.hidden2 + params.b3();
  return c;
}

Vector forward(const MlpParams& params, const Eigen::Ref<const Vector>& input) {
  return forward_cached(params, input).output;
}

Matrix forward_batch(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs) {
  if (inputs.rows() != params.shape().input) {
    throw std::invalid_argument("forward_batch: input rows do not match network shape");
  }
  Matrix h1 = ((params.w1() * inputs).colwise() + params.b1()).array().tanh().matrix();
  Matrix h2 = ((params.w2() * h1).colwise() + params.b2()).array().tanh().matrix();
  Matrix out = (params.w3() * h2).colwise() + params.b3();
  return out;
}

Vector backward_accumulate(const MlpParams& params, const ForwardCache& cache,
                           const Eigen::Ref<const Vector>& output_grad, Eigen::Ref<Vector> param_grad) {
  const MlpShape& s = params.shape();
  const MlpLayout layout(s);
  if (output_grad.size() != s.output || param_grad.size() != static_cast<Eigen::Index>(layout.total)) {
    throw std::invalid_argument("backward: gradient buffer shape mismatch");
  }
  double* g = param_grad.data();
  Eigen::Map<Matrix> gw3(g + layout.w3, s.output, s.hidden2);
  Eigen::Map<Vector> gb3(g + layout.b3, s.output);
  Eigen::Map<Matrix> gw2(g + layout.w2, s.hidden2, s.hidden1);
  Eigen::Map<Vector> gb2(g + layout.b2, s.hidden2);
  Eigen::Map<Matrix> gw1(g + layout.w1, s.hidden1, s.input);
  Eigen::Map<Vector> gb1(g + layout.b1, s.hidden1);

  gw3.noalias() += output_grad * cache.hidden2.transpose();
  gb3 += output_grad;
  const Vector d2 = ((params.w3().transpose() * output_grad).array() * (1.0 - cache.hidden2.array().square()))
                        .matrix();
  gw2.noalias() += d2 * cache.hidden1.transpose();
  gb2 += d2;
  const Vector d1 =
      ((params.w2().transpose() * d2).array() * (1.0 - cache.hidden1.array().square())).matrix();
  gw1.noalias() += d1 * cache.input.transpose();
  gb1 += d1;
  return params.w1().transpose() * d1;
}

BatchCache forward_batch_cached(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs) {
  if (inputs.rows() != params.shape().input) {
    throw std::invalid_argument("forward_batch: input rows do not match network shape");
  }
  BatchCache c;
  c.input = inputs;
  c.hidden1.noalias() = params.w1() * inputs;
  c.hidden1.colwise() += params.b1();
  c.hidden1.array() = c.hidden1.array().tanh();
  c.hidden2.noalias() = params.w2() * c.hidden1;
  c.hidden2.colwise() += params.b2();
  c.hidden2.array() = c.hidden2.array().tanh();
  c.output.noalias() = params.w3() * c.hidden2;
  c.output.colwise() += params.b3();
  return c;
}

Matrix backward_batch_accumulate(const MlpParams& params, const BatchCache& cache,
                                 const Eigen::Ref<const Matrix>& output_grads, Eigen::Ref<Vector> param_grad) {
  const MlpShape& s = params.shape();
  const MlpLayout layout(s);
  if (output_grads.rows() != s.output || output_grads.cols() != cache.input.cols() ||
      param_grad.size() != static_cast<Eigen::Index>(layout.total)) {
    throw std::invalid_argument("backward: gradient buffer shape mismatch");
  }
  double* g = param_grad.data();
  Eigen::Map<Matrix> gw3(g + layout.w3, s.output, s.hidden2);
  Eigen::Map<Vector> gb3(g + layout.b3, s.output);
  Eigen::Map<Matrix> gw2(g + layout.w2, s.hidden2, s.hidden1);
  Eigen::Map<Vector> gb2(g + layout.b2, s.hidden2);
  Eigen::Map<Matrix> gw1(g + layout.w1, s.hidden1, s.input);
  Eigen::Map<Vector> gb1(g + layout.b1, s.hidden1);

  gw3.noalias() += output_grads * cache.hidden2.transpose();
  gb3 += output_grads.rowwise().sum();
  Matrix d2 = params.w3().transpose() * output_grads;
  d2.array() *= 1.0 - cache.hidden2.array().square();
  gw2.noalias() += d2 * cache.hidden1.transpose();
  gb2 += d2.rowwise().sum();
  Matrix d1 = params.w2().transpose() * d2;
  d1.array() *= 1.0 - cache.hidden1.array().square();
  gw1.noalias() += d1 * cache.input.transpose();
  gb1 += d1.rowwise().sum();
  return params.w1().transpose() * d1;
}

BackwardResult backward(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs,
                        const Eigen::Ref<const Matrix>& output_grads) {
  const MlpShape& s = params.shape();
  if (inputs.cols() == 0) throw std::invalid_argument("backward: empty batch");
  if (inputs.rows() != s.input || output_grads.rows() != s.output || inputs.cols() != output_grads.cols()) {
    std::ostringstream msg;
    msg << "backward: shape mismatch (inputs " << inputs.rows() << "x" << inputs.cols() << ", output_grads "
        << output_grads.rows() << "x" << output_grads.cols() << ", network " << s.input << "->" << s.output << ")";
    throw std::invalid_argument(msg.str());
  }
  BackwardResult result{Gradient::Zero(static_cast<Eigen::Index>(params.size())), Matrix()};
  result.inputs = backward_batch_accumulate(params, forward_batch_cached(params, inputs), output_grads, result.params);
  return result;
}

}  // namespace cmaml::nn
