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

// Meta-gradient oracles: 1-D quadratics with a closed form, and a 25-weight
// regression net whose meta gradient is rebuilt from loss values alone.
#pragma once

#include <random>

#include "cmaml/nn/hvp.hpp"
#include "cmaml/nn/mlp.hpp"
#include "test_support.hpp"

namespace cmaml::testing {

/// L(theta) = a * theta^2 / 2 on a one-element vector.
inline nn::LossGradFn quadratic(double a) {
  return [a](const nn::Vector& theta, nn::Vector& grad) {
    grad = a * theta;
    return 0.5 * a * theta.squaredNorm();
  };
}

struct SmallNetProblem {
  static constexpr nn::MlpShape kShape{2, 3, 3, 1};

  nn::Vector theta;
  Eigen::MatrixXd x_train, y_train, x_test, y_test;

  explicit SmallNetProblem(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    theta = nn::init_params(kShape, rng).values() + random_vector(static_cast<Eigen::Index>(kShape.param_count()), rng, 0.1);
    x_train = random_matrix(2, 8, rng);
    x_test = random_matrix(2, 8, rng);
    // Targets from a different net so both losses are well away from zero.
    const nn::MlpParams teacher = nn::init_params(kShape, rng);
    y_train = nn::forward_batch(teacher, x_train);
    y_test = nn::forward_batch(teacher, x_test) + random_matrix(1, 8, rng, 0.1);
  }

  static double loss_value(const nn::Vector& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (nn::forward_batch(nn::MlpParams(kShape, p), x) - y).squaredNorm();
  }

  static nn::LossGradFn loss_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return [x, y](const nn::Vector& p, nn::Vector& grad) {
      const nn::MlpParams params(kShape, p);
      const Eigen::MatrixXd r = nn::forward_batch(params, x) - y;
      grad = nn::backward(params, x, 2.0 * r).params;
      return r.squaredNorm();
    };
  }

  [[nodiscard]] nn::LossGradFn train_fn() const { return loss_grad(x_train, y_train); }
  [[nodiscard]] nn::LossGradFn test_fn() const { return loss_grad(x_test, y_test); }

  /// (I - eta H_train(theta)) g_test(theta - eta g_train(theta)), every term
  /// from finite differences of loss values.
  [[nodiscard]] nn::Vector oracle_meta_gradient(double eta) const {
    const ScalarFn train = [this](const Eigen::VectorXd& p) { return loss_value(p, x_train, y_train); };
    const ScalarFn test = [this](const Eigen::VectorXd& p) { return loss_value(p, x_test, y_test); };
    const nn::Vector g_train = fd_gradient(train, theta, 1e-6);
    const nn::Vector g_test = fd_gradient(test, theta - eta * g_train, 1e-6);
    const Eigen::MatrixXd h = fd_hessian(train, theta, 1e-4);
    return g_test - eta * (h * g_test);
  }
};

}  // namespace cmaml::testing
