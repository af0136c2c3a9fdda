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

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "cmaml/nn/checkpoint.hpp"
#include "cmaml/nn/hvp.hpp"
#include "cmaml/nn/mlp.hpp"
#include "cmaml/nn/optim.hpp"
#include "test_support.hpp"

using namespace cmaml::nn;
using cmaml::testing::random_matrix;
using cmaml::testing::random_vector;

namespace {

// Straightforward triple-loop evaluation over the documented flat layout:
// W1 (h1 x in, column-major), b1, W2, b2, W3, b3.
std::vector<double> reference_forward(const MlpShape& s, const Vector& theta, const Vector& x) {
  std::size_t k = 0;
  auto dense = [&](const std::vector<double>& in, int fan_in, int fan_out, bool activate) {
    std::vector<double> out(static_cast<std::size_t>(fan_out), 0.0);
    for (int j = 0; j < fan_in; ++j)
      for (int i = 0; i < fan_out; ++i) out[static_cast<std::size_t>(i)] += theta[static_cast<Eigen::Index>(k++)] * in[static_cast<std::size_t>(j)];
    for (int i = 0; i < fan_out; ++i) {
      out[static_cast<std::size_t>(i)] += theta[static_cast<Eigen::Index>(k++)];
      if (activate) out[static_cast<std::size_t>(i)] = std::tanh(out[static_cast<std::size_t>(i)]);
    }
    return out;
  };
  std::vector<double> in(x.data(), x.data() + x.size());
  auto h1 = dense(in, s.input, s.hidden1, true);
  auto h2 = dense(h1, s.hidden1, s.hidden2, true);
  return dense(h2, s.hidden2, s.output, false);
}

MlpParams random_params(const MlpShape& shape, std::mt19937_64& rng, double scale = 0.5) {
  return MlpParams(shape, random_vector(static_cast<Eigen::Index>(shape.param_count()), rng, scale));
}

}  // namespace

TEST_CASE("dynamics network has 1412 coefficients") {
  CHECK(kDynamicsShape.param_count() == 1412);
  CHECK(MlpParams().size() == 1412);
  CHECK_THROWS_AS(MlpParams(kDynamicsShape, Vector::Zero(1411)), std::invalid_argument);
}

TEST_CASE("init_params") {
  SUBCASE("same seed gives bit-identical arrays") {
    std::mt19937_64 a(7), b(7);
    CHECK(init_params(kDynamicsShape, a) == init_params(kDynamicsShape, b));
  }
  SUBCASE("biases are zero and weights are bounded by 1/sqrt(fan_in)") {
    double lo = 1.0, hi = -1.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      const MlpParams p = init_params(kDynamicsShape, rng);
      CHECK(p.b1().isZero(0.0));
      CHECK(p.b2().isZero(0.0));
      CHECK(p.b3().isZero(0.0));
      lo = std::min(lo, p.w1().minCoeff());
      hi = std::max(hi, p.w1().maxCoeff());
      CHECK(p.w2().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(32.0));
      CHECK(p.all_finite());
    }
    const double bound = 1.0 / std::sqrt(6.0);
    CHECK(lo >= -bound);
    CHECK(hi <= bound);
    // 10 seeds x 192 draws should reach close to both ends of the interval.
    CHECK(lo < -0.39);
    CHECK(hi > 0.39);
  }
}

TEST_CASE("forward") {
  SUBCASE("zero network outputs zero") {
    const MlpParams zero;
    Vector x(6);
    x << 1, -2, 3, 0.5, 0.1, -0.7;
    CHECK(forward(zero, x).isZero(0.0));
  }
  SUBCASE("output bias passes through a zero-weight network") {
    MlpParams p;
    p.b3() << 0.25, -1.5, 3.0, 7.0;
    const Vector out = forward(p, Vector::Zero(6));
    CHECK(out[0] == 0.25);
    CHECK(out[1] == -1.5);
    CHECK(out[2] == 3.0);
    CHECK(out[3] == 7.0);
  }
  SUBCASE("matches a triple-loop reference to 1e-12") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const MlpParams p = random_params(kDynamicsShape, rng);
      const Vector x = random_vector(6, rng);
      const Vector out = forward(p, x);
      const auto ref = reference_forward(kDynamicsShape, p.values(), x);
      for (int i = 0; i < 4; ++i) CHECK(std::abs(out[i] - ref[static_cast<std::size_t>(i)]) < 1e-12);
      const Matrix batch = forward_batch(p, x);
      CHECK((batch.col(0) - out).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("zero weights make the output independent of the input") {
    std::mt19937_64 rng(3);
    MlpParams p;
    p.b1() = random_vector(32, rng);
    p.b2() = random_vector(32, rng);
    p.b3() = random_vector(4, rng);
    const Vector a = forward(p, random_vector(6, rng));
    const Vector b = forward(p, random_vector(6, rng, 10.0));
    CHECK((a.array() == b.array()).all());
  }
}

TEST_CASE("backward") {
  std::mt19937_64 rng(5);
  SUBCASE("zero output gradients give a zero gradient") {
    const MlpParams p = random_params(kDynamicsShape, rng);
    const BackwardResult r = backward(p, random_matrix(6, 3, rng), Matrix::Zero(4, 3));
    CHECK(r.params.isZero(0.0));
    CHECK(r.inputs.isZero(0.0));
  }
  SUBCASE("shape mismatch is rejected") {
    const MlpParams p;
    CHECK_THROWS_AS(backward(p, Matrix::Zero(5, 2), Matrix::Zero(4, 2)), std::invalid_argument);
    CHECK_THROWS_AS(backward(p, Matrix::Zero(6, 2), Matrix::Zero(4, 3)), std::invalid_argument);
    CHECK_THROWS_AS(backward(p, Matrix::Zero(6, 0), Matrix::Zero(4, 0)), std::invalid_argument);
  }
  SUBCASE("batch gradient is the sum of single-sample gradients") {
    const MlpParams p = random_params(kDynamicsShape, rng);
    const Matrix x = random_matrix(6, 2, rng);
    const Matrix g = random_matrix(4, 2, rng);
    const Vector both = backward(p, x, g).params;
    const Vector sum = backward(p, x.col(0), g.col(0)).params + backward(p, x.col(1), g.col(1)).params;
    CHECK((both - sum).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("every coefficient matches central differences on 20 random instances") {
    for (int trial = 0; trial < 20; ++trial) {
      const MlpParams p = random_params(kDynamicsShape, rng);
      const Matrix x = random_matrix(6, 3, rng);
      const Matrix g = random_matrix(4, 3, rng);
      auto loss = [&](const Vector& theta) {
        const MlpParams q(kDynamicsShape, theta);
        return (forward_batch(q, x).array() * g.array()).sum();
      };
      const BackwardResult r = backward(p, x, g);
      const Vector fd = cmaml::testing::fd_gradient(loss, p.values(), 1e-5);
      CHECK(cmaml::testing::worst_ratio(r.params, fd, 1e-5, 1e-9) <= 1.0);

      // input gradients
      for (int col = 0; col < 3; ++col) {
        auto in_loss = [&](const Vector& xi) { return forward(p, xi).dot(g.col(col)); };
        const Vector fd_in = cmaml::testing::fd_gradient(in_loss, x.col(col), 1e-5);
        CHECK(cmaml::testing::worst_ratio(r.inputs.col(col), fd_in, 1e-5, 1e-9) <= 1.0);
      }
    }
  }
}

TEST_CASE("hvp") {
  SUBCASE("quadratic loss gives A v") {
    Matrix a(3, 3);
    a << 4, 1, 0.5, 1, 3, -0.2, 0.5, -0.2, 2;
    LossGradFn quad = [&](const Vector& th, Vector& g) {
      g = a * th;
      return 0.5 * th.dot(a * th);
    };
    Vector theta(3), v(3);
    theta << 0.3, -1.2, 2.0;
    v << 1.0, 2.0, -0.5;
    CHECK((hvp(theta, quad, v) - a * v).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("preconditions") {
    LossGradFn zero = [](const Vector& th, Vector& g) {
      g = Vector::Zero(th.size());
      return 0.0;
    };
    const Vector theta = Vector::Ones(3);
    CHECK_THROWS_AS(hvp(theta, zero, Vector::Constant(3, 1e-14)), std::invalid_argument);
    CHECK_THROWS_AS(hvp(theta, zero, Vector::Ones(3), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(hvp(theta, zero, Vector::Ones(3), -1e-3), std::invalid_argument);
  }

  // Toy net with 2 -> 3 -> 3 -> 1 (25 coefficients) on a fixed regression set.
  const MlpShape toy{2, 3, 3, 1};
  REQUIRE(toy.param_count() == 25);
  std::mt19937_64 rng(21);
  const Matrix xs = random_matrix(2, 8, rng);
  const Matrix ys = random_matrix(1, 8, rng);
  LossGradFn toy_loss = [&](const Vector& th, Vector& g) {
    const MlpParams p(toy, th);
    const Matrix pred = forward_batch(p, xs);
    const Matrix resid = pred - ys;
    g = backward(p, xs, resid).params;
    return 0.5 * resid.squaredNorm();
  };

  SUBCASE("u . H v equals v . H u on random small nets") {
    for (int trial = 0; trial < 10; ++trial) {
      const Vector theta = random_vector(25, rng, 0.7);
      const Vector u = random_vector(25, rng);
      const Vector v = random_vector(25, rng);
      CHECK(std::abs(u.dot(hvp(theta, toy_loss, v)) - v.dot(hvp(theta, toy_loss, u))) < 1e-4);
    }
  }
  SUBCASE("basis-vector HVPs rebuild a symmetric dense Hessian") {
    const Vector theta = random_vector(25, rng, 0.7);
    Matrix h(25, 25);
    for (int i = 0; i < 25; ++i) h.col(i) = hvp(theta, toy_loss, Vector::Unit(25, i));
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-4);
    auto value_only = [&](const Vector& th) {
      Vector unused;
      return toy_loss(th, unused);
    };
    const Matrix oracle = cmaml::testing::fd_hessian(value_only, theta, 1e-3);
    CHECK((h - oracle).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("sgd_step") {
  Vector p(1), g(1);
  p << 1.0;
  g << 0.5;
  CHECK(sgd_step(p, g, 0.1)[0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(sgd_step(p, Vector::Zero(1), 0.1)[0] == 1.0);
  g << 1.0;
  CHECK(sgd_step(p, g, 0.1)[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_THROWS_AS(sgd_step(p, g, 0.0), std::invalid_argument);
}

TEST_CASE("adam_step") {
  SUBCASE("first step of a scalar matches the hand-computed update") {
    Vector p(1), g(1);
    p << 0.0;
    g << 0.2;
    // m = 0.02, v = 4e-5; bias-corrected m_hat = 0.2, v_hat = 0.04.
    const double expected = -1e-4 * 0.2 / (std::sqrt(0.04) + 1e-8);
    const AdamResult r = adam_step(p, g, AdamState(1), 1e-4);
    CHECK(r.params[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(r.params[0]) == doctest::Approx(1e-4).epsilon(1e-6));
    CHECK(r.state.t == 2);
  }
  SUBCASE("zero gradient at t = 1 leaves parameters unchanged") {
    const Vector p = Vector::LinSpaced(5, -1, 1);
    const AdamResult r = adam_step(p, Vector::Zero(5), AdamState(5), 1e-3);
    CHECK((r.params.array() == p.array()).all());
    CHECK(r.state.t == 2);
    CHECK((r.state.v.array() >= 0.0).all());
  }
  SUBCASE("deterministic and t increases by one per step") {
    std::mt19937_64 rng(9);
    const Vector p = random_vector(10, rng);
    AdamState s1(10), s2(10);
    Vector a = p, b = p;
    for (int k = 0; k < 5; ++k) {
      const Vector g = random_vector(10, rng);
      auto r1 = adam_step(a, g, s1, 1e-3);
      auto r2 = adam_step(b, g, s2, 1e-3);
      CHECK(r1.state.t == s1.t + 1);
      a = r1.params;
      b = r2.params;
      s1 = r1.state;
      s2 = r2.state;
    }
    CHECK((a.array() == b.array()).all());
  }
}

TEST_CASE("clip_by_norm") {
  Vector g(2);
  g << 30.0, 40.0;
  CHECK(clip_by_norm(g, 10.0) == doctest::Approx(50.0));
  CHECK(g.norm() == doctest::Approx(10.0));
  Vector small(2);
  small << 0.3, 0.4;
  clip_by_norm(small, 10.0);
  CHECK(small[0] == 0.3);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    Checkpoint ckpt{random_params(kDynamicsShape, rng, 3.0),
                    InputNormalizer{random_vector(6, rng), random_vector(6, rng).cwiseAbs()}};
    ckpt.params.values()[0] = 0.0;
    ckpt.params.values()[1] = -1e-300;
    std::stringstream buf;
    write_checkpoint(buf, ckpt);
    const Checkpoint back = read_checkpoint(buf);
    CHECK(back.params == ckpt.params);
    CHECK(back.normalizer == ckpt.normalizer);
  }
  std::stringstream bad("cmaml-checkpoint 2\n");
  CHECK_THROWS(read_checkpoint(bad));
}

TEST_CASE("input normalizer standardizes the fitted samples") {
  std::mt19937_64 rng(2);
  Matrix samples = random_matrix(6, 500, rng, 3.0);
  samples.row(5).setConstant(2.0);
  const InputNormalizer n = InputNormalizer::fit(samples);
  CHECK(n.stddev[5] == 1.0);
  Matrix z(6, 500);
  for (int i = 0; i < 500; ++i) z.col(i) = n.apply(samples.col(i));
  for (int r = 0; r < 5; ++r) {
    CHECK(std::abs(z.row(r).mean()) < 1e-12);
    CHECK(z.row(r).squaredNorm() / 500.0 == doctest::Approx(1.0).epsilon(1e-9));
  }
}
