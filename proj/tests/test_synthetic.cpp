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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "cagm/burgers.hpp"
#include "cagm/gp_sampling.hpp"
#include "cagm/synthetic.hpp"

using namespace cagm;

namespace {

Matrix empirical_covariance(const Matrix& samples) {
  const Matrix centered = samples.rowwise() - samples.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(samples.rows());
}

double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

// Independent adaptive quadrature of the signal moments over [lo, hi],
// split at the kink.
double oracle_signal_std(double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  auto integrate = [&](auto f) {
    return gauss_kronrod<double, 61>::integrate(f, lo, 0.03, 15, 1e-13) +
           gauss_kronrod<double, 61>::integrate(f, 0.03, hi, 15, 1e-13);
  };
  auto signal = [](double x) {
    const double s = std::abs(x - 0.03) + 0.03;
    return std::log(10 * s) * std::sin(std::numbers::pi * s);
  };
  const double mean = integrate(signal) / (hi - lo);
  const double var = integrate([&](double x) { return std::pow(signal(x) - mean, 2); }) / (hi - lo);
  return std::sqrt(var);
}

BurgersSpec short_spec(BurgersBoundary b) {
  BurgersSpec s;
  s.boundary = b;
  return s;
}

Vector sample_ic(const BurgersSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return conditional_gp_ic(spec, 1, rng).row(0).transpose();
}

}  // namespace

TEST_CASE("rbf kernel") {
  const GpSpec unit{1.0, 0.5};
  CHECK(rbf_kernel(0.0, 1.0, unit) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(rbf_kernel(0.0, 1.0, unit) == doctest::Approx(0.3679).epsilon(1e-4));
  const GpSpec s{0.7, 2.0};
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
    CHECK(rbf_kernel(a, a, s) == 0.7);
    CHECK(rbf_kernel(a, b, s) == rbf_kernel(b, a, s));
  }
  Vector xs = Vector::LinSpaced(30, -3, 3);
  const Matrix k = rbf_gram(xs, xs, s);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  CHECK_THROWS_AS(rbf_kernel(0, 1, GpSpec{-1.0, 1.0}), ConfigError);
}

TEST_CASE("gp sampling") {
  SUBCASE("zero covariance is a point mass") {
    Vector mean(3);
    mean << 1.0, -2.0, 0.5;
    Rng rng(1);
    const Matrix s = sample_gp(mean, Matrix::Zero(3, 3), 10, rng);
    for (Eigen::Index i = 0; i < s.rows(); ++i) CHECK(s.row(i) == mean.transpose());
  }
  SUBCASE("identity covariance") {
    Rng rng(2);
    const Matrix s = sample_gp(Vector::Zero(2), Matrix::Identity(2, 2), 100000, rng);
    CHECK((empirical_covariance(s) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
  }
  SUBCASE("rbf gram over 20 points") {
    const Vector xs = Vector::LinSpaced(20, 0, 1);
    const Matrix k = rbf_gram(xs, xs, GpSpec{1.0, 0.1});
    Rng rng(3);
    const Matrix s = sample_gp(Vector::Zero(20), k, 10000, rng);
    CHECK(rel_frobenius(empirical_covariance(s), k) < 0.1);
  }
  SUBCASE("singular gram needs jitter") {
    Vector xs(3);
    xs << 0.0, 0.0, 1.0;
    const Matrix k = rbf_gram(xs, xs, GpSpec{1.0, 1.0});
    const CholeskyResult c = cholesky_with_jitter(k);
    CHECK(c.jitter > 0.0);
    CHECK(c.jitter <= 1e-6);
    CHECK((c.lower * c.lower.transpose() - k).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("indefinite matrix reports its smallest eigenvalue") {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    try {
      cholesky_with_jitter(m);
      FAIL("expected NotPsdError");
    } catch (const NotPsdError& e) {
      CHECK(e.min_eigenvalue() == doctest::Approx(-1.0));
    }
  }
  SUBCASE("shape errors") {
    Rng rng(4);
    CHECK_THROWS_AS(sample_gp(Vector::Zero(2), Matrix::Identity(3, 3), 1, rng), DimensionError);
  }
}

TEST_CASE("regression signal and noise") {
  CHECK(regression_signal(0.03) == doctest::Approx(std::log(0.3) * std::sin(0.03 * std::numbers::pi)).epsilon(1e-15));
  CHECK(regression_signal(0.03) == doctest::Approx(-0.1133).epsilon(1e-3));
  CHECK(heteroscedastic_envelope(0.03) == doctest::Approx(0.5 / std::exp(0.06)).epsilon(1e-15));
  CHECK(heteroscedastic_envelope(0.03) == doctest::Approx(0.4709).epsilon(1e-4));
  for (double d : {0.1, 0.7, 1.9}) {
    CHECK(heteroscedastic_envelope(0.03 + d) == heteroscedastic_envelope(0.03 - d));
    CHECK(regression_signal(0.03 + d) == doctest::Approx(regression_signal(0.03 - d)).epsilon(1e-14));
  }
  CHECK(regression_signal_std() == doctest::Approx(oracle_signal_std(-2, 2)).epsilon(1e-9));
}

TEST_CASE("regression datasets") {
  SUBCASE("zero homoscedastic noise lies on the curve") {
    RegressionSpec spec;
    spec.homoscedastic_fraction = 0.0;
    Rng rng(1);
    const auto d = noisy_regression_dataset(NoiseCase::homoscedastic, 500, rng, spec);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      CHECK(d.outputs(i, 0) == regression_signal(d.inputs(i, 0)));
      CHECK(d.inputs(i, 0) >= -2.0);
      CHECK(d.inputs(i, 0) <= 2.0);
    }
  }
  SUBCASE("homoscedastic residual scale") {
    Rng rng(2);
    const auto d = noisy_regression_dataset(NoiseCase::homoscedastic, 100000, rng);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) ss += std::pow(d.outputs(i, 0) - regression_signal(d.inputs(i, 0)), 2);
    const double sd = std::sqrt(ss / static_cast<double>(d.size()));
    CHECK(sd == doctest::Approx(0.05 * oracle_signal_std(-2, 2)).epsilon(0.01));
  }
  SUBCASE("cases are reproducible and parse by name") {
    Rng a(3), b(3);
    CHECK(noisy_regression_dataset(NoiseCase::non_additive, 10, a).outputs ==
          noisy_regression_dataset(NoiseCase::non_additive, 10, b).outputs);
    CHECK(parse_noise_case(to_string(NoiseCase::heteroscedastic)) == NoiseCase::heteroscedastic);
    CHECK_THROWS_AS(parse_noise_case("unknown"), ConfigError);
  }
}

TEST_CASE("exact regression moments agree with Monte Carlo") {
  constexpr int n = 400000;
  for (NoiseCase c : {NoiseCase::heteroscedastic, NoiseCase::non_additive}) {
    for (double x : {-1.3, 0.03, 0.5}) {
      const Moments m = regression_moments(c, x);
      Rng rng(11);
      const double sd = heteroscedastic_envelope(x);
      const double s = std::abs(x - 0.03) + 0.03;
      double sum = 0.0, sum2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double delta = sd * rng.normal();
        const double y = c == NoiseCase::heteroscedastic
                             ? regression_signal(x) + delta
                             : std::log(10 * s) * std::sin(std::numbers::pi * s + 2 * delta) + delta;
        sum += y;
        sum2 += y * y;
      }
      const double mean = sum / n;
      const double var = sum2 / n - mean * mean;
      CHECK(std::abs(mean - m.mean) < 4.0 * std::sqrt(m.variance / n));
      CHECK(var == doctest::Approx(m.variance).epsilon(0.02));
    }
  }
}

TEST_CASE("multi-fidelity process") {
  const MultiFidelitySpec spec;
  CHECK(mu_high(0.5) == doctest::Approx(std::sin(2.0)).epsilon(1e-15));
  CHECK(mu_high(0.5) == doctest::Approx(0.9093).epsilon(1e-4));
  CHECK(mu_low(0.5) == doctest::Approx(0.5 * std::sin(2.0) - 5.0).epsilon(1e-15));
  CHECK(mu_low(0.5) == doctest::Approx(-4.5454).epsilon(1e-4));

  Vector xs(4);
  xs << 0.0, 0.4, 0.6, 1.0;
  const Matrix cov = multifidelity_covariance(spec, xs);
  CHECK(cov(4, 4) == doctest::Approx(0.564).epsilon(1e-14));
  CHECK(cov(0, 4) == doctest::Approx(0.08).epsilon(1e-14));
  CHECK(high_fidelity_variance(spec) == doctest::Approx(0.564).epsilon(1e-14));
  const Matrix kl = rbf_gram(xs, xs, spec.low);
  CHECK((cov.topLeftCorner(4, 4) - kl).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((cov.topRightCorner(4, 4) - 0.8 * kl).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((cov.bottomRightCorner(4, 4) - (0.64 * kl + rbf_gram(xs, xs, spec.high))).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(cholesky_with_jitter(cov).jitter <= 1e-8 * cov.diagonal().maxCoeff());

  for (double rho : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    MultiFidelitySpec r = spec;
    r.rho = rho;
    const Matrix c = multifidelity_covariance(r, xs);
    CHECK(cholesky_with_jitter(c).jitter <= 1e-8 * c.diagonal().maxCoeff());
  }

  Rng rng(5);
  const MultiFidelityData data = multifidelity_dataset(spec, rng);
  CHECK(data.low.rows() == 50);
  CHECK(data.high.cols() == 4);
  const auto pairs = multifidelity_pairs(data);
  CHECK(pairs.size() == 200);
  CHECK(pairs.inputs.cols() == 2);
  CHECK(single_fidelity_pairs(data).inputs.cols() == 1);
  for (Eigen::Index i = 0; i < pairs.size(); ++i) {
    const auto r = i / 4, s = i % 4;
    CHECK(pairs.inputs(i, 0) == xs(s));
    CHECK(pairs.inputs(i, 1) == data.low(r, s));
    CHECK(pairs.outputs(i, 0) == data.high(r, s));
  }
}

TEST_CASE("benchmark dataset has 10000 points in [0, 1]") {
  Rng rng(1);
  const auto d = benchmark_dataset(BenchmarkSpec{}, rng);
  CHECK(d.size() == 10000);
  CHECK(d.inputs.minCoeff() >= 0.0);
  CHECK(d.inputs.maxCoeff() <= 1.0);
}

TEST_CASE("conditional gp initial conditions") {
  const BurgersSpec spec;
  const GaussianField f = conditional_gp_ic_moments(spec);
  CHECK(f.mean.cwiseAbs().maxCoeff() == 0.0);
  const Vector grid = spec.grid();
  for (double anchor : spec.anchors) {
    const auto it = std::find_if(grid.begin(), grid.end(), [&](double g) { return std::abs(g - anchor) < 1e-12; });
    if (it != grid.end()) CHECK(f.cov(it - grid.begin(), it - grid.begin()) <= 1e-8);
  }
  CHECK(f.cov(0, 0) <= 1e-8);
  const auto mid = static_cast<Eigen::Index>(std::lround((-2.0 - spec.x_lo) / (spec.x_hi - spec.x_lo) * 128));
  CHECK(f.cov(mid, mid) == doctest::Approx(0.005).epsilon(0.1));
  Rng rng(1);
  const Matrix ics = conditional_gp_ic(spec, 3, rng);
  CHECK(ics.rows() == 3);
  CHECK(ics.cols() == 128);
}

TEST_CASE("burgers solver") {
  for (BurgersBoundary b : {BurgersBoundary::periodic, BurgersBoundary::dirichlet}) {
    CAPTURE(to_string(b));
    const BurgersSpec spec = short_spec(b);
    SUBCASE("zero initial condition stays zero") {
      const BurgersSolution sol = burgers_solve(Vector::Zero(128), spec);
      CHECK(sol.u.cwiseAbs().maxCoeff() == 0.0);
      CHECK(sol.u.rows() == 256);
      CHECK(sol.times(255) == 50.0);
    }
    SUBCASE("energy is non-increasing and step halving converges") {
      const Vector u0 = sample_ic(spec, 7);
      const BurgersSolution sol = burgers_solve(u0, spec);
      double prev = u0.squaredNorm();
      for (Eigen::Index j = 0; j < sol.u.rows(); ++j) {
        const double e = sol.u.row(j).squaredNorm();
        CHECK(e <= prev * (1 + 1e-12));
        prev = e;
      }
      BurgersSpec fine = spec;
      fine.micro_steps *= 2;
      const BurgersSolution half = burgers_solve(u0, fine);
      const auto last = sol.u.rows() - 1;
      CHECK((half.u.row(last) - sol.u.row(last)).norm() / sol.u.row(last).norm() < 1e-6);
    }
    SUBCASE("non-finite input is a solver divergence") {
      Vector bad = Vector::Zero(128);
      bad(5) = std::numeric_limits<double>::quiet_NaN();
      CHECK_THROWS_AS(burgers_solve(bad, spec), SolverDivergenceError);
      CHECK_THROWS_AS(burgers_solve(Vector::Zero(64), spec), DimensionError);
    }
  }
}

TEST_CASE("periodic burgers conserves the spatial mean") {
  const BurgersSpec spec = short_spec(BurgersBoundary::periodic);
  const Vector u0 = sample_ic(spec, 3) + Vector::Constant(128, 0.02);
  const BurgersSolution sol = burgers_solve(u0, spec);
  const double m0 = u0.mean();
  CHECK((sol.u.rowwise().mean().array() - m0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("dirichlet burgers keeps the boundary at zero") {
  const BurgersSpec spec = short_spec(BurgersBoundary::dirichlet);
  const BurgersSolution sol = burgers_solve(sample_ic(spec, 4), spec);
  CHECK(sol.max_boundary_abs < 1e-3);
  CHECK(sol.max_boundary_abs < 1e-12);
}

TEST_CASE("burgers dataset split") {
  BurgersSpec spec = short_spec(BurgersBoundary::dirichlet);
  Rng data_rng(1), split_rng(2);
  const BurgersDataset ds = burgers_dataset(spec, 100, 64, data_rng, split_rng);
  CHECK(ds.train.size() == 6400);
  CHECK(ds.train.outputs.cols() == 128);
  CHECK(ds.train_snapshots.size() == 64);
  CHECK(ds.heldout_snapshots.size() == 192);
  const std::set<std::size_t> train(ds.train_snapshots.begin(), ds.train_snapshots.end());
  for (std::size_t q : quarter_time_snapshots(spec)) {
    CHECK(train.count(q) == 0);
    CHECK(std::binary_search(ds.heldout_snapshots.begin(), ds.heldout_snapshots.end(), q));
  }
  const Vector times = spec.times();
  CHECK(times(static_cast<Eigen::Index>(quarter_time_snapshots(spec)[0])) == 12.5);
  for (std::size_t i = 0; i < ds.train.labels.size(); ++i) {
    const double t = ds.train.labels[i];
    CHECK(std::find(times.begin(), times.end(), t) != times.end());
    CHECK(ds.train.inputs(static_cast<Eigen::Index>(i), 0) == doctest::Approx(2 * t / 50 - 1));
  }
  CHECK(ds.max_boundary_abs < 1e-3);

  // the split depends on the split stream only
  Rng other_data(99), same_split(2);
  BurgersSpec tiny = spec;
  const BurgersDataset again = burgers_dataset(tiny, 1, 64, other_data, same_split);
  CHECK(again.train_snapshots == ds.train_snapshots);
}
