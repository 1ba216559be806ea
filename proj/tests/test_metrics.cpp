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
#include <numbers>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "cagm/errors.hpp"
#include "cagm/metrics.hpp"
#include "cagm/synthetic.hpp"

using namespace cagm;

namespace {

// Integral of p1 (log p1 - log p2) over mu1 +- 10 sigma1, written with log
// densities so the integrand stays finite in the tails.
double quadrature_kl(const Gaussian1D& p1, const Gaussian1D& p2) {
  auto log_pdf = [](const Gaussian1D& g, double y) {
    return -0.5 * std::log(2 * std::numbers::pi * g.sigma2) - 0.5 * (y - g.mu) * (y - g.mu) / g.sigma2;
  };
  auto integrand = [&](double y) {
    const double l1 = log_pdf(p1, y);
    return std::exp(l1) * (l1 - log_pdf(p2, y));
  };
  const double s = std::sqrt(p1.sigma2);
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, p1.mu - 10 * s, p1.mu + 10 * s, 20, 1e-14);
}

Vector two_point(double mean, double half_width) {
  Vector v(2);
  v << mean - half_width, mean + half_width;
  return v;
}

}  // namespace

TEST_CASE("gauss_kl closed form") {
  CHECK(gauss_kl({0.3, 2.0}, {0.3, 2.0}) == 0.0);
  const double expect = std::log(2.0) + 2.0 / 8.0 - 0.5;
  CHECK(gauss_kl({0, 1}, {1, 4}) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(gauss_kl({0, 1}, {1, 4}) == doctest::Approx(0.4431).epsilon(1e-4));
  CHECK(gauss_kl({0, 4}, {0, 1}) == doctest::Approx(std::log(0.5) + 2.0 - 0.5).epsilon(1e-15));
  CHECK(gauss_kl({0, 4}, {0, 1}) == doctest::Approx(0.8069).epsilon(1e-4));
}

TEST_CASE("gauss_kl matches quadrature on random pairs") {
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Gaussian1D p1{rng.uniform(-3, 3), rng.uniform(0.05, 4)};
    const Gaussian1D p2{rng.uniform(-3, 3), rng.uniform(0.05, 4)};
    worst = std::max(worst, std::abs(gauss_kl(p1, p2) - quadrature_kl(p1, p2)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("gauss_kl properties") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Gaussian1D p{rng.uniform(-3, 3), rng.uniform(0.05, 4)};
    Gaussian1D q{rng.uniform(-3, 3), rng.uniform(0.05, 4)};
    CHECK(gauss_kl(p, q) >= 0.0);
    CHECK(gauss_kl(p, p) <= 1e-12);
    CHECK(gauss_kl(p, q) != gauss_kl(q, p));
  }
  CHECK_THROWS_AS(gauss_kl({0, 0}, {0, 1}), DomainError);
  CHECK_THROWS_AS(gauss_kl({0, 1}, {0, -1}), DomainError);
}

TEST_CASE("fit_gaussian") {
  const Gaussian1D g = fit_gaussian(two_point(2.0, 1.0));
  CHECK(g.mu == 2.0);
  CHECK(g.sigma2 == 1.0);
  Rng rng(3);
  Vector s(100000);
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = rng.normal();
  const Gaussian1D n = fit_gaussian(s);
  CHECK(std::abs(n.mu) < 0.02);
  CHECK(n.sigma2 == doctest::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(fit_gaussian(Vector::Constant(5, 1.5)), DegenerateDistributionError);
  CHECK_THROWS_AS(fit_gaussian(Vector::Constant(1, 1.5)), ConfigError);
}

TEST_CASE("marginal KL averages") {
  const ExactMarginal standard = [](double) { return Gaussian1D{0.0, 1.0}; };
  SUBCASE("per-location 0.1 and 0.3 average to 0.2") {
    Vector xs(2);
    xs << 0.25, 0.75;
    Matrix samples(2, 2);
    samples.col(0) = two_point(std::sqrt(0.2), 1.0);
    samples.col(1) = two_point(std::sqrt(0.6), 1.0);
    const MarginalReport r = marginal_kl_from_samples(xs, samples, standard);
    CHECK(r.kl_reverse(0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.kl_reverse(1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(r.avg_reverse == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.avg_forward == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.average(KlDirection::reverse) == r.avg_reverse);
  }
  SUBCASE("identical marginals average to 0") {
    Vector xs(3);
    xs << 0.0, 0.5, 1.0;
    Matrix samples(2, 3);
    for (int i = 0; i < 3; ++i) samples.col(i) = two_point(0.0, 1.0);
    const MarginalReport r = marginal_kl_from_samples(xs, samples, standard);
    CHECK(r.avg_forward == 0.0);
    CHECK(r.avg_reverse == 0.0);
  }
  SUBCASE("degenerate locations are excluded and counted") {
    Vector xs(3);
    xs << 0.0, 0.5, 1.0;
    Matrix samples(2, 3);
    samples.col(0) = two_point(std::sqrt(0.2), 1.0);
    samples.col(1) = Vector::Constant(2, 4.0);
    samples.col(2) = two_point(std::sqrt(0.6), 1.0);
    const MarginalReport r = marginal_kl_from_samples(xs, samples, standard);
    CHECK(r.excluded() == 1);
    CHECK(r.excluded_xs[0] == 0.5);
    CHECK(r.xs.size() == 2);
    CHECK(r.avg_reverse == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("report rows") {
    Vector xs(1);
    xs << 0.5;
    Matrix samples(2, 1);
    samples.col(0) = two_point(0.0, 1.0);
    std::ostringstream os;
    write_report_rows(os, marginal_kl_from_samples(xs, samples, standard));
    CHECK(os.str() == "x,kl_forward,kl_reverse\n0.5,0,0\nmean,0,0\n");
  }
}

TEST_CASE("avg_marginal_kl against a model with doubled spread") {
  const ExactMarginal exact = [](double x) { return Gaussian1D{mu_high(x), 0.5}; };
  const MarginalSampler wide = [](double x, std::size_t n, Rng& rng) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = mu_high(x) + 2 * std::sqrt(0.5) * rng.normal();
    return v;
  };
  Rng rng(4);
  const MarginalReport r = avg_marginal_kl(wide, exact, uniform_grid(0, 1, 20), 20000, rng);
  for (Eigen::Index i = 0; i < r.kl_reverse.size(); ++i) CHECK(r.kl_reverse(i) == doctest::Approx(0.8069).epsilon(0.03));
}

TEST_CASE("avg_marginal_kl of the exact process vanishes") {
  const ExactMarginal exact = [](double x) { return Gaussian1D{mu_high(x), 0.5}; };
  const MarginalSampler same = [](double x, std::size_t n, Rng& rng) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = mu_high(x) + std::sqrt(0.5) * rng.normal();
    return v;
  };
  Rng rng(5);
  const MarginalReport r = avg_marginal_kl(same, exact, uniform_grid(0, 1, 100), 10000, rng);
  CHECK(r.avg_reverse <= 0.01);
  CHECK(r.avg_forward <= 0.01);
  CHECK(r.avg_reverse == doctest::Approx(r.kl_reverse.mean()).epsilon(1e-14));
  CHECK(r.excluded() == 0);
}

TEST_CASE("test locations") {
  const Vector g = uniform_grid(0, 1, 100);
  CHECK(g.size() == 100);
  CHECK(g(0) == 0.0);
  CHECK(g(99) == 1.0);
  Rng a(6), b(6);
  const Vector r = random_locations(0, 1, 50, a);
  CHECK(r == random_locations(0, 1, 50, b));
  CHECK(r.minCoeff() >= 0.0);
  CHECK(r.maxCoeff() <= 1.0);
}
