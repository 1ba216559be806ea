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

#include "cagm/metrics.hpp"

#include <cmath>
#include <ostream>
#include <utility>

#include "cagm/errors.hpp"
#include "cagm/format.hpp"

namespace cagm {

double gauss_kl(const Gaussian1D& p1, const Gaussian1D& p2) {
  if (!(p1.sigma2 > 0.0) || !(p2.sigma2 > 0.0) || !std::isfinite(p1.sigma2) ||
      !std::isfinite(p2.sigma2))
    throw DomainError("gauss_kl: variances must be positive and finite");
  const double d = p1.mu - p2.mu;
  const double kl = 0.5 * std::log(p2.sigma2 / p1.sigma2) + (p1.sigma2 + d * d) / (2.0 * p2.sigma2) - 0.5;
  // exact value is >= 0; rounding can leave a few ulps below
  return kl < 0.0 ? 0.0 : kl;
}

Gaussian1D fit_gaussian(const Vector& samples) {
  if (samples.size() < 2) throw ConfigError("fit_gaussian: need at least two samples");
  if (!samples.allFinite()) throw DegenerateDistributionError("fit_gaussian: non-finite sample");
  Gaussian1D g;
  g.mu = samples.mean();
  g.sigma2 = (samples.array() - g.mu).square().mean();
  if (!(g.sigma2 > 0.0)) throw DegenerateDistributionError("fit_gaussian: zero sample variance");
  return g;
}

namespace {

class ReportBuilder {
 public:
  void add(double x, const Gaussian1D& truth, const Vector& samples) {
    try {
      const Gaussian1D fit = fit_gaussian(samples);
      const double f = gauss_kl(truth, fit);
      const double r = gauss_kl(fit, truth);
      if (!std::isfinite(f) || !std::isfinite(r)) throw DomainError("non-finite KL");
      xs_.push_back(x);
      fwd_.push_back(f);
      rev_.push_back(r);
    } catch (const DegenerateDistributionError& e) {
      report_.excluded_xs.push_back(x);
      report_.excluded_reasons.emplace_back(e.what());
    } catch (const DomainError& e) {
      report_.excluded_xs.push_back(x);
      report_.excluded_reasons.emplace_back(e.what());
    }
  }

  MarginalReport finish() {
    const auto n = static_cast<Eigen::Index>(xs_.size());
    report_.xs = Eigen::Map<const Vector>(xs_.data(), n);
    report_.kl_forward = Eigen::Map<const Vector>(fwd_.data(), n);
    report_.kl_reverse = Eigen::Map<const Vector>(rev_.data(), n);
    const double nan = std::nan("");
    report_.avg_forward = n > 0 ? report_.kl_forward.mean() : nan;
    report_.avg_reverse = n > 0 ? report_.kl_reverse.mean() : nan;
    return std::move(report_);
  }

 private:
  std::vector<double> xs_, fwd_, rev_;
  MarginalReport report_;
};

}  // namespace

MarginalReport avg_marginal_kl(const MarginalSampler& model, const ExactMarginal& exact,
                               const Vector& test_xs, std::size_t n_mc, Rng& rng) {
  if (test_xs.size() == 0) throw ConfigError("avg_marginal_kl: no test locations");
  if (n_mc < 2) throw ConfigError("avg_marginal_kl: n_mc must be >= 2");
  ReportBuilder builder;
  for (const double x : test_xs) builder.add(x, exact(x), model(x, n_mc, rng));
  return builder.finish();
}

MarginalReport marginal_kl_from_samples(const Vector& xs, const Matrix& samples,
                                        const ExactMarginal& exact) {
  if (xs.size() == 0) throw ConfigError("marginal_kl_from_samples: no test locations");
  if (samples.cols() != xs.size())
    throw DimensionError("marginal_kl_from_samples: " + std::to_string(samples.cols()) +
                         " sample columns for " + std::to_string(xs.size()) + " locations");
  ReportBuilder builder;
  for (Eigen::Index i = 0; i < xs.size(); ++i) builder.add(xs(i), exact(xs(i)), samples.col(i));
  return builder.finish();
}

Vector uniform_grid(double lo, double hi, std::size_t n) {
  if (n == 0) throw ConfigError("uniform_grid: n must be positive");
  if (n == 1) return Vector::Constant(1, 0.5 * (lo + hi));
  return Vector::LinSpaced(static_cast<Eigen::Index>(n), lo, hi);
}

Vector random_locations(double lo, double hi, std::size_t n, Rng& rng) {
  Vector out(static_cast<Eigen::Index>(n));
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

void write_report_rows(std::ostream& os, const MarginalReport& report) {
  os << "x,kl_forward,kl_reverse\n";
  for (Eigen::Index i = 0; i < report.xs.size(); ++i)
    os << format_real(report.xs(i)) << ',' << format_real(report.kl_forward(i)) << ','
       << format_real(report.kl_reverse(i)) << '\n';
  os << "mean," << format_real(report.avg_forward) << ',' << format_real(report.avg_reverse) << '\n';
}

}  // namespace cagm
