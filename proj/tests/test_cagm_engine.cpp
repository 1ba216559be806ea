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

#include "cagm/cagm_model.hpp"
#include "cagm/grad_check.hpp"

using namespace cagm;
using M = MatrixX<double>;
using Var = Tape<double>::Var;

namespace {

// 1-D x, 1-D y, 1-D z with affine (no hidden layer) networks, all zero.
CagmModel<double> linear_model() {
  CagmModel<double> m;
  m.input_dim = m.output_dim = m.latent_dim = 1;
  m.generator = Mlp<double>({2, 1});
  m.encoder = Mlp<double>({2, 1});
  m.discriminator = Mlp<double>({2, 1});
  m.validate();
  return m;
}

M col(std::initializer_list<double> v) {
  M out(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double d : v) out(i++, 0) = d;
  return out;
}

double log_sigmoid(double t) { return -std::log1p(std::exp(-t)); }

ModelArchitecture small_arch() {
  ModelArchitecture a;
  a.generator_hidden = {8, 8};
  a.encoder_hidden = {8};
  a.discriminator_hidden = {8};
  return a;
}

PairedDataset<double> toy_data(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  PairedDataset<double> d;
  d.inputs.resize(n, 1);
  d.outputs.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.inputs(i, 0) = rng.uniform(-1, 1);
    d.outputs(i, 0) = std::sin(3 * d.inputs(i, 0)) + 0.1 * rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("latent prior draws are standard normal") {
  Rng rng(1);
  const M z = sample_latent<double>(100000, 1, rng);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().mean();
  CHECK(std::abs(mean) < 4.0 / std::sqrt(1e5));
  CHECK(std::abs(var - 1.0) < 0.05);
  Rng a(7), b(7);
  CHECK(sample_latent<double>(5, 3, a) == sample_latent<double>(5, 3, b));
  CHECK_THROWS_AS(sample_latent<double>(0, 3, a), ConfigError);
}

TEST_CASE("generate") {
  CagmModel<double> m = linear_model();
  const M x = col({0.3, -1.2, 4.0});
  const M z = col({1.0, 0.5, -2.0});
  SUBCASE("zero generator gives zeros") { CHECK(generate(m, x, z).cwiseAbs().maxCoeff() == 0.0); }
  SUBCASE("unit weights give x + z") {
    m.generator.weight(0) << 1.0, 1.0;
    CHECK(generate(m, x, z) == x + z);
    CHECK(generate(m, x, z) == generate(m, x, z));
  }
  SUBCASE("width and row mismatches") {
    CHECK_THROWS_AS(generate(m, M(M::Zero(3, 2)), z), DimensionError);
    CHECK_THROWS_AS(generate(m, x, M(M::Zero(2, 1))), DimensionError);
  }
}

TEST_CASE("discriminator loss at an uninformative discriminator is -ln 4") {
  const CagmModel<double> m = CagmModel<double>::create(small_arch(), 3);
  CagmModel<double> flat = m;
  for (auto& p : flat.discriminator.parameters()) p.setZero();
  Rng rng(2);
  const M x = rng.normal_matrix<double>(16, 1);
  const M y = rng.normal_matrix<double>(16, 1);
  const M z = rng.normal_matrix<double>(16, 1);
  CHECK(discriminator_loss(flat, x, y, z) == doctest::Approx(-std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("discriminator loss hand-evaluated example") {
  // logit = y, generator y = z: fake z = 1 gives logit 1, real y = -1 gives logit -1
  CagmModel<double> m = linear_model();
  m.generator.weight(0) << 0.0, 1.0;
  m.discriminator.weight(0) << 0.0, 1.0;
  const double expect = log_sigmoid(1.0) + log_sigmoid(1.0);
  CHECK(discriminator_loss(m, col({0.0}), col({-1.0}), col({1.0})) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(-0.6265).epsilon(1e-4));
}

TEST_CASE("discriminator loss approaches 0 at perfect confidence and saturates") {
  CagmModel<double> m = linear_model();
  m.generator.weight(0) << 0.0, 1.0;
  m.discriminator.weight(0) << 0.0, 1000.0;
  std::size_t saturated = 0;
  const double v = discriminator_loss(m, col({0.0, 0.0}), col({-1.0, -2.0}), col({1.0, 2.0}), &saturated);
  CHECK(v <= 0.0);
  CHECK(v == doctest::Approx(2 * log_sigmoid(30.0)).epsilon(1e-12));
  CHECK(v > -1e-12);
  CHECK(saturated == 4);
}

TEST_CASE("discriminator loss is never positive") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = CagmModel<double>::create(small_arch(), s);
    Rng rng(s + 100);
    const M x = 3 * rng.normal_matrix<double>(8, 1);
    const M y = 3 * rng.normal_matrix<double>(8, 1);
    const M z = rng.normal_matrix<double>(8, 1);
    CHECK(discriminator_loss(m, x, y, z) <= 0.0);
  }
}

TEST_CASE("generator loss examples") {
  CagmModel<double> m = linear_model();
  SUBCASE("constant logit and fixed cycle error") {
    m.discriminator.bias(0)(0, 0) = 0.2;
    const double z = std::sqrt(0.5);  // encoder outputs 0, so |z - z_hat|^2 = 0.5
    CHECK(generator_loss(m, col({0.7}), col({1.0}), col({z}), 1.5, 0.0) == doctest::Approx(0.325).epsilon(1e-14));
  }
  SUBCASE("lambda = 1, beta = 0 is the adversarial term alone") {
    const auto r = CagmModel<double>::create(small_arch(), 5);
    Rng rng(6);
    const M x = rng.normal_matrix<double>(10, 1);
    const M y = rng.normal_matrix<double>(10, 1);
    const M z = rng.normal_matrix<double>(10, 1);
    const double adversarial = r.discriminator.forward(hconcat(x, generate(r, x, z))).mean();
    CHECK(generator_loss(r, x, y, z, 1.0, 0.0) == doctest::Approx(adversarial).epsilon(1e-14));
  }
  SUBCASE("perfect cycle leaves the adversarial term") {
    m.generator.weight(0) << 0.0, 1.0;      // y = z
    m.encoder.weight(0) << 0.0, 1.0;        // z_hat = y
    m.discriminator.weight(0) << 0.5, -0.25;
    const M x = col({1.0, 2.0});
    const M z = col({0.3, -0.4});
    const double adversarial = (0.5 * 1.0 - 0.25 * 0.3 + 0.5 * 2.0 + 0.25 * 0.4) / 2.0;
    CHECK(generator_loss(m, x, x, z, 3.7, 0.0) == doctest::Approx(adversarial).epsilon(1e-14));
  }
  SUBCASE("beta adds the mean squared residual") {
    m.generator.weight(0) << 1.0, 0.0;      // y_fake = x
    const M x = col({1.0, 2.0});
    const M y = col({0.0, 4.0});
    CHECK(generator_loss(m, x, y, col({0.0, 0.0}), 1.0, 0.5) == doctest::Approx(0.5 * (1.0 + 4.0) / 2.0));
  }
  SUBCASE("lambda below 1 is rejected") {
    CHECK_THROWS_AS(generator_loss(m, col({0.0}), col({0.0}), col({0.0}), 0.9, 0.0), ConfigError);
  }
}

TEST_CASE("full loss graphs pass the gradient check") {
  ModelArchitecture arch = small_arch();
  arch.input_dim = 2;
  arch.output_dim = 2;
  arch.latent_dim = 2;
  const auto m = CagmModel<double>::create(arch, 9);
  Rng rng(10);
  const M x = rng.normal_matrix<double>(6, 2);
  const M y = rng.normal_matrix<double>(6, 2);
  const M z = rng.normal_matrix<double>(6, 2);
  const auto ng = m.generator.parameters().size();
  const auto ne = m.encoder.parameters().size();

  ScalarGraph<double> gen = [&](Tape<double>& t, std::span<const Var> p) {
    return generator_objective<double>(t, m, p.subspan(0, ng), p.subspan(ng, ne), p.subspan(ng + ne), x, y, z, 1.5, 0.5);
  };
  std::vector<M> all = m.generator.parameters();
  all.insert(all.end(), m.encoder.parameters().begin(), m.encoder.parameters().end());
  all.insert(all.end(), m.discriminator.parameters().begin(), m.discriminator.parameters().end());
  CHECK(grad_check<double>(gen, all, 1e-6) < 1e-5);

  const M fake = generate(m, x, z);
  ScalarGraph<double> disc = [&](Tape<double>& t, std::span<const Var> p) {
    return discriminator_objective<double>(t, m, p, x, y, fake);
  };
  CHECK(grad_check<double>(disc, m.discriminator.parameters(), 1e-6) < 1e-5);
}

TEST_CASE("each optimizer step touches only its own networks") {
  auto m = CagmModel<double>::create(small_arch(), 4);
  TrainConfig cfg;
  cfg.lambda = 1.5;
  Trainer<double> trainer(m, cfg);
  Rng rng(5);
  const M x = rng.normal_matrix<double>(8, 1);
  const M y = rng.normal_matrix<double>(8, 1);

  const auto before = m;
  trainer.discriminator_step(x, y, rng.normal_matrix<double>(8, 1));
  CHECK(m.generator.parameters() == before.generator.parameters());
  CHECK(m.encoder.parameters() == before.encoder.parameters());
  CHECK(m.discriminator.parameters() != before.discriminator.parameters());

  const auto mid = m;
  trainer.generator_step(x, y, rng.normal_matrix<double>(8, 1));
  CHECK(m.discriminator.parameters() == mid.discriminator.parameters());
  CHECK(m.generator.parameters() != mid.generator.parameters());
  CHECK(m.encoder.parameters() != mid.encoder.parameters());
  CHECK(trainer.discriminator_optimizer().step_count() == 1);
  CHECK(trainer.generator_optimizer().step_count() == 1);
}

TEST_CASE("training") {
  const auto data = toy_data(64, 1);
  TrainConfig cfg;
  cfg.k_d = 2;
  cfg.batch_size = 16;
  cfg.seed = 3;

  SUBCASE("zero iterations is a no-op") {
    auto m = CagmModel<double>::create(small_arch(), 1);
    const auto before = m;
    cfg.iterations = 0;
    const LossHistory h = train(m, data, cfg);
    CHECK(h.empty());
    CHECK(m.generator.parameters() == before.generator.parameters());
    CHECK(m.discriminator.parameters() == before.discriminator.parameters());
  }
  SUBCASE("identical seeds give identical histories") {
    cfg.iterations = 25;
    auto a = CagmModel<double>::create(small_arch(), 1);
    auto b = CagmModel<double>::create(small_arch(), 1);
    const LossHistory ha = train(a, data, cfg);
    const LossHistory hb = train(b, data, cfg);
    CHECK(ha.size() == 25);
    CHECK(ha.discriminator == hb.discriminator);
    CHECK(ha.generator == hb.generator);
    CHECK(a.generator.parameters() == b.generator.parameters());
  }
  SUBCASE("non-finite data aborts with the iteration index") {
    auto bad = data;
    bad.outputs(0, 0) = std::numeric_limits<double>::quiet_NaN();
    cfg.batch_size = 0;
    cfg.iterations = 5;
    auto m = CagmModel<double>::create(small_arch(), 1);
    try {
      train(m, bad, cfg);
      FAIL("expected divergence");
    } catch (const TrainingDivergenceError& e) {
      CHECK(e.iteration() == 0);
      CHECK(e.partial_history().empty());
    }
  }
  SUBCASE("invalid configuration") {
    auto m = CagmModel<double>::create(small_arch(), 1);
    cfg.lambda = 0.5;
    CHECK_THROWS_AS(train(m, data, cfg), ConfigError);
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(train(m, PairedDataset<double>{M(0, 1), M(0, 1), {}}, cfg), ConfigError);
  }
}

TEST_CASE("predictive moments") {
  CagmModel<double> m = linear_model();
  const M xs = col({0.4});
  SUBCASE("generator ignoring z has zero variance") {
    m.generator.weight(0) << 2.0, 0.0;
    m.generator.bias(0)(0, 0) = 1.0;
    Rng rng(1);
    const auto s = predict_moments(m, xs, 100, rng);
    CHECK(s.variance(0) == 0.0);
    CHECK(s.mean(0) == doctest::Approx(1.8).epsilon(1e-15));
  }
  SUBCASE("f(x, z) = z reproduces the prior") {
    m.generator.weight(0) << 0.0, 1.0;
    Rng rng(2);
    const auto s = predict_moments(m, xs, 100000, rng);
    CHECK(std::abs(s.mean(0)) < 4.0 / std::sqrt(1e5));
    CHECK(std::abs(s.variance(0) - 1.0) < 0.05);
  }
  SUBCASE("two samples use the 1/N normalization") {
    const auto s = sample_moments<double>(col({1.0, 3.0}));
    CHECK(s.mean(0) == 2.0);
    CHECK(s.variance(0) == 1.0);
  }
  SUBCASE("samples agree with the moments and are reproducible") {
    const auto r = CagmModel<double>::create(small_arch(), 8);
    Rng a(3), b(3), c(4);
    const M sa = predict_samples(r, xs, 100000, a);
    CHECK(sa == predict_samples(r, xs, 100000, b));
    const auto moments = predict_moments(r, xs, 100000, c);
    const auto direct = sample_moments<double>(sa);
    const double se = std::sqrt(moments.variance(0) / 1e5);
    CHECK(std::abs(direct.mean(0) - moments.mean(0)) < 3 * std::sqrt(2.0) * se);
    CHECK(moments.variance(0) >= 0.0);
  }
  SUBCASE("single sample and argument errors") {
    Rng rng(5);
    CHECK(predict_samples(m, xs, 1, rng).rows() == 1);
    CHECK_THROWS_AS(predict_moments(m, xs, 1, rng), ConfigError);
    CHECK_THROWS_AS(predict_samples(m, col({1.0, 2.0}), 10, rng), DimensionError);
  }
}

TEST_CASE("models cast to single precision") {
  const auto m = CagmModel<double>::create(small_arch(), 2);
  const auto f = m.cast<float>();
  Rng rng(1);
  const M x = rng.normal_matrix<double>(4, 1);
  const M z = rng.normal_matrix<double>(4, 1);
  const MatrixX<float> yf = generate(f, MatrixX<float>(x.cast<float>()), MatrixX<float>(z.cast<float>()));
  CHECK((yf.cast<double>() - generate(m, x, z)).cwiseAbs().maxCoeff() < 1e-5);
}
