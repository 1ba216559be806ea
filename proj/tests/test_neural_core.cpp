/*
 * Copyright 2026 The cagm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "cagm/adam.hpp"
#include "cagm/errors.hpp"
#include "cagm/grad_check.hpp"
#include "cagm/mlp.hpp"
#include "cagm/random.hpp"
#include "cagm/tape.hpp"

using namespace cagm;
using M = MatrixX<double>;
using Var = Tape<double>::Var;

namespace {

M random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return scale * rng.normal_matrix<double>(r, c);
}

double check(const ScalarGraph<double>& g, std::vector<M> params) {
  return grad_check<double>(g, std::move(params), 1e-6);
}

}  // namespace

TEST_CASE("tanh_of matches std::tanh") {
  M x(1, 9);
  x << -40, -3, -0.5, -1e-9, 0, 1e-9, 0.5, 3, 40;
  const M t = tanh_of(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(t(i) == doctest::Approx(std::tanh(x(i))).epsilon(1e-15));
  const M wide = random_matrix(50, 50, 3, 4.0);
  CHECK((tanh_of(wide) - wide.array().tanh().matrix()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("tape gradients agree with central differences for every op") {
  const M a = random_matrix(4, 3, 1);
  const M w = random_matrix(3, 2, 2);
  const M b = random_matrix(1, 2, 3);
  const M pos = random_matrix(4, 3, 4).cwiseAbs().array() + 0.5;

  SUBCASE("affine + tanh + mean") {
    auto g = [](Tape<double>& t, std::span<const Var> p) { return t.mean(t.tanh(t.affine(p[0], p[1], p[2]))); };
    CHECK(check(g, {a, w, b}) < 1e-7);
  }
  SUBCASE("add, sub, scale, square, sum") {
    auto g = [](Tape<double>& t, std::span<const Var> p) {
      return t.sum(t.square(t.scale(t.sub(t.add(p[0], p[1]), p[0]), 0.7)));
    };
    CHECK(check(g, {a, random_matrix(4, 3, 9)}) < 1e-7);
  }
  SUBCASE("sigmoid, log, log_sigmoid") {
    auto g = [](Tape<double>& t, std::span<const Var> p) {
      return t.add(t.mean(t.log(p[1])), t.add(t.mean(t.sigmoid(p[0])), t.sum(t.log_sigmoid(p[0]))));
    };
    CHECK(check(g, {a, pos}) < 1e-7);
  }
  SUBCASE("row_sum and concat") {
    auto g = [](Tape<double>& t, std::span<const Var> p) {
      return t.mean(t.square(t.row_sum(t.concat(p[0], p[1]))));
    };
    CHECK(check(g, {a, random_matrix(4, 2, 7)}) < 1e-7);
  }
  SUBCASE("clamp inside the bounds passes gradients through") {
    auto g = [](Tape<double>& t, std::span<const Var> p) { return t.sum(t.square(t.clamp(p[0], -10, 10))); };
    CHECK(check(g, {a}) < 1e-7);
  }
}

TEST_CASE("clamp has zero gradient outside the bounds") {
  Tape<double> t;
  M v(1, 3);
  v << -50, 0.5, 50;
  auto x = t.variable(v);
  auto out = t.sum(t.clamp(x, -30, 30));
  t.backward(out);
  const M g = t.grad(x);
  CHECK(g(0) == 0.0);
  CHECK(g(1) == 1.0);
  CHECK(g(2) == 0.0);
  CHECK(t.scalar(out) == doctest::Approx(0.5));
}

TEST_CASE("log_sigmoid is finite for large logits") {
  Tape<double> t;
  M v(1, 2);
  v << -800, 800;
  auto x = t.variable(v);
  auto ls = t.log_sigmoid(x);
  CHECK(t.value(ls)(0) == doctest::Approx(-800));
  CHECK(t.value(ls)(1) == doctest::Approx(0.0));
  t.backward(t.sum(ls));
  CHECK(t.grad(x)(0) == doctest::Approx(1.0));
  CHECK(t.grad(x)(1) == doctest::Approx(0.0));
}

TEST_CASE("backward from a non-scalar is a contract violation") {
  Tape<double> t;
  auto x = t.variable(random_matrix(2, 2, 1));
  CHECK_THROWS_AS(t.backward(t.tanh(x)), ContractViolation);
}

TEST_CASE("constants receive no gradient") {
  Tape<double> t;
  auto c = t.constant(random_matrix(2, 2, 1));
  auto v = t.variable(random_matrix(2, 2, 2));
  auto out = t.sum(t.add(c, v));
  t.backward(out);
  CHECK_FALSE(t.requires_grad(c));
  CHECK(t.grad(c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.grad(v).isApproxToConstant(1.0));
}

TEST_CASE("shape mismatch raises a dimension error") {
  Tape<double> t;
  auto a = t.variable(random_matrix(2, 3, 1));
  auto b = t.variable(random_matrix(3, 2, 2));
  CHECK_THROWS_AS(t.add(a, b), DimensionError);
}

TEST_CASE("grad_check reports non-finite evaluations") {
  auto g = [](Tape<double>& t, std::span<const Var> p) { return t.sum(t.log(p[0])); };
  M neg(1, 1);
  neg << -1.0;
  CHECK_THROWS_AS(check(g, {neg}), EvaluationError);
}

TEST_CASE("grad_check detects a wrong gradient") {
  // A detached copy hides half of the true slope from the tape.
  auto g = [](Tape<double>& t, std::span<const Var> p) {
    auto detached = t.constant(t.value(p[0]));
    return t.sum(t.square(t.add(p[0], detached)));
  };
  CHECK(check(g, {random_matrix(2, 2, 5)}) > 0.4);
}

TEST_CASE("mlp forward on the tape equals the plain forward") {
  Rng rng(11);
  const std::vector<Eigen::Index> widths{3, 7, 5, 2};
  const Mlp<double> net = xavier_init<double>(std::span<const Eigen::Index>(widths), rng);
  const M x = random_matrix(6, 3, 12);
  Tape<double> t;
  auto params = net.bind(t, true);
  auto y = net.forward(t, t.constant(x), params);
  CHECK((t.value(y) - net.forward(x)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp gradients agree with central differences") {
  Rng rng(21);
  const std::vector<Eigen::Index> widths{2, 6, 6, 1};
  const Mlp<double> net = xavier_init<double>(std::span<const Eigen::Index>(widths), rng);
  const M x = random_matrix(5, 2, 22);
  auto g = [&](Tape<double>& t, std::span<const Var> p) {
    return t.mean(t.square(net.forward(t, t.constant(x), p)));
  };
  CHECK(check(g, net.parameters()) < 1e-6);
}

TEST_CASE("mlp input width mismatch") {
  Mlp<double> net({3, 4, 1});
  CHECK_THROWS_AS(net.forward(M::Zero(2, 5)), DimensionError);
  CHECK_THROWS_AS(Mlp<double>({3}), ConfigError);
  CHECK_THROWS_AS(Mlp<double>({3, 0, 1}), ConfigError);
}

TEST_CASE("xavier normal initialization statistics") {
  Rng rng(5);
  const std::vector<Eigen::Index> widths{200, 300, 100};
  const Mlp<double> net = xavier_init<double>(std::span<const Eigen::Index>(widths), rng);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const M& w = net.weight(l);
    const double target = 2.0 / static_cast<double>(w.rows() + w.cols());
    const double mean = w.mean();
    const double var = (w.array() - mean).square().mean();
    const double n = static_cast<double>(w.size());
    CHECK(std::abs(mean) < 4.0 * std::sqrt(target / n));
    // chi-square concentration: sd of the variance estimate is target*sqrt(2/n)
    CHECK(std::abs(var - target) < 5.0 * target * std::sqrt(2.0 / n));
    CHECK(net.bias(l).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("xavier initialization is reproducible from the seed") {
  const std::vector<Eigen::Index> widths{4, 8, 1};
  const auto a = xavier_init<double>(std::span<const Eigen::Index>(widths), std::uint64_t{9});
  const auto b = xavier_init<double>(std::span<const Eigen::Index>(widths), std::uint64_t{9});
  for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i] == b.parameters()[i]);
}

TEST_CASE("adam matches a hand-rolled reference") {
  std::vector<M> params{random_matrix(2, 3, 1)};
  const std::vector<M> start = params;
  AdamOptions opts;
  opts.learning_rate = 0.01;
  Adam<double> adam(params, opts);
  std::vector<M> g1{random_matrix(2, 3, 2)};
  std::vector<M> g2{random_matrix(2, 3, 3)};
  adam.step(params, g1);
  adam.step(params, g2);

  // reference: elementwise Adam recursion
  M expect = start[0];
  M m = M::Zero(2, 3), v = M::Zero(2, 3);
  int t = 0;
  for (const M* g : {&g1[0], &g2[0]}) {
    ++t;
    for (Eigen::Index i = 0; i < expect.size(); ++i) {
      m(i) = 0.9 * m(i) + 0.1 * (*g)(i);
      v(i) = 0.999 * v(i) + 0.001 * (*g)(i) * (*g)(i);
      const double mh = m(i) / (1 - std::pow(0.9, t));
      const double vh = v(i) / (1 - std::pow(0.999, t));
      expect(i) -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK((params[0] - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(adam.step_count() == 2);
}

TEST_CASE("adam first step moves each entry by the learning rate against the gradient sign") {
  std::vector<M> params{M::Zero(1, 3)};
  Adam<double> adam(params, AdamOptions{});
  M g(1, 3);
  g << 2.0, -0.5, 1e3;
  adam.step(params, std::vector<M>{g});
  CHECK(params[0](0) == doctest::Approx(-1e-4).epsilon(1e-6));
  CHECK(params[0](1) == doctest::Approx(1e-4).epsilon(1e-6));
  CHECK(params[0](2) == doctest::Approx(-1e-4).epsilon(1e-6));
}

TEST_CASE("adam rejects non-finite gradients before touching parameters") {
  std::vector<M> params{M::Ones(1, 2)};
  Adam<double> adam(params, AdamOptions{});
  M g(1, 2);
  g << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam.step(params, std::vector<M>{g}), TrainingDivergenceError);
  CHECK(params[0].isApproxToConstant(1.0));
  CHECK_THROWS_AS(adam.step(params, std::vector<M>{M::Ones(2, 2)}), DimensionError);
}

TEST_CASE("adam with a zero gradient leaves parameters unchanged") {
  std::vector<M> params{random_matrix(3, 2, 4)};
  const M start = params[0];
  Adam<double> adam(params, AdamOptions{});
  adam.step(params, std::vector<M>{M::Zero(3, 2)});
  CHECK(params[0] == start);
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam steps are bounded by the learning rate") {
  std::vector<M> params{M::Zero(1, 4)};
  Adam<double> adam(params, AdamOptions{});
  const M g = M::Ones(1, 4);
  M prev = params[0];
  for (int i = 0; i < 2; ++i) {
    adam.step(params, std::vector<M>{g});
    CHECK((params[0] - prev).cwiseAbs().maxCoeff() <= 1e-4 * (1 + 1e-6));
    CHECK((params[0] - prev).maxCoeff() < 0.0);
    prev = params[0];
  }
}

TEST_CASE("mlp forward is batch-equivariant") {
  const std::vector<Eigen::Index> widths{2, 5, 3};
  const Mlp<double> net = xavier_init<double>(std::span<const Eigen::Index>(widths), std::uint64_t{3});
  const M x = random_matrix(7, 2, 4);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(7);
  perm.setIdentity();
  Rng rng(8);
  for (Eigen::Index i = 6; i > 0; --i)
    std::swap(perm.indices()(i), perm.indices()(static_cast<Eigen::Index>(rng.index(i + 1))));
  const M px = perm * x;
  CHECK((net.forward(px) - perm * net.forward(x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("xavier variance for a 100 to 100 layer") {
  const std::vector<Eigen::Index> widths{100, 100};
  const Mlp<double> net = xavier_init<double>(std::span<const Eigen::Index>(widths), std::uint64_t{17});
  const M& w = net.weight(0);
  const double var = (w.array() - w.mean()).square().mean();
  CHECK(std::abs(var - 0.01) < 0.001);
  CHECK(std::abs(w.mean()) < 4.0 * std::sqrt(0.01 / 1e4));
}
