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

// Shared helpers for the unit and acceptance suites: seeded generators and
// finite-difference oracles that only ever call loss values.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

namespace cmaml::testing {

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

/// Central-difference gradient.
inline Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& x, double eps) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

/// Dense Hessian from second differences of function values.
inline Eigen::MatrixXd fd_hessian(const ScalarFn& f, const Eigen::VectorXd& x, double eps) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  const double f0 = f(x);
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = x[i] + eps;
    const double fp = f(p);
    p[i] = x[i] - eps;
    const double fm = f(p);
    p[i] = x[i];
    h(i, i) = (fp - 2.0 * f0 + fm) / (eps * eps);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      auto at = [&](double di, double dj) {
        p[i] = x[i] + di;
        p[j] = x[j] + dj;
        const double v = f(p);
        p[i] = x[i];
        p[j] = x[j];
        return v;
      };
      h(i, j) = (at(eps, eps) - at(eps, -eps) - at(-eps, eps) + at(-eps, -eps)) / (4.0 * eps * eps);
      h(j, i) = h(i, j);
    }
  }
  return h;
}

/// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

/// Worst per-coefficient violation ratio; <= 1 means every coefficient passes.
inline double worst_ratio(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double rel, double abs_floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double allowed = rel * std::max(std::abs(a[i]), std::abs(b[i])) + abs_floor;
    worst = std::max(worst, std::abs(a[i] - b[i]) / allowed);
  }
  return worst;
}

}  // namespace cmaml::testing
