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

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cagm/gp_sampling.hpp"
#include "cagm/random.hpp"

namespace cagm {

struct Gaussian1D {
  double mu = 0.0;
  double sigma2 = 1.0;
};

/// KL(p1 || p2) between univariate Gaussians. Throws DomainError unless
/// both variances are positive and finite.
double gauss_kl(const Gaussian1D& p1, const Gaussian1D& p2);

/// Sample mean and 1/n variance. Throws DegenerateDistributionError when
/// the samples have zero spread, ConfigError when fewer than two.
Gaussian1D fit_gaussian(const Vector& samples);

enum class KlDirection { forward, reverse };  // forward = KL(exact||model), reverse = KL(model||exact)

/// Draws n samples of the model's predictive marginal at scalar input x.
using MarginalSampler = std::function<Vector(double x, std::size_t n, Rng& rng)>;
using ExactMarginal = std::function<Gaussian1D(double x)>;

struct MarginalReport {
  Vector xs;           // evaluated locations (excluded ones are dropped)
  Vector kl_forward;   // per location
  Vector kl_reverse;   // per location
  double avg_forward = 0.0;
  double avg_reverse = 0.0;
  std::vector<double> excluded_xs;
  std::vector<std::string> excluded_reasons;

  std::size_t excluded() const noexcept { return excluded_xs.size(); }
  double average(KlDirection d) const { return d == KlDirection::forward ? avg_forward : avg_reverse; }
};

/// Average marginal KL between a model and an exact process over test_xs.
/// Each location gets n_mc fresh samples and a Gaussian moment fit; both
/// directions are always evaluated. Locations whose fit is degenerate or
/// whose KL is not finite are excluded and counted.
MarginalReport avg_marginal_kl(const MarginalSampler& model, const ExactMarginal& exact,
                               const Vector& test_xs, std::size_t n_mc, Rng& rng);

/// Same report from precomputed samples: column i holds the model's
/// samples at xs(i).
MarginalReport marginal_kl_from_samples(const Vector& xs, const Matrix& samples,
                                        const ExactMarginal& exact);

/// n uniformly spaced points covering [lo, hi] inclusive.
Vector uniform_grid(double lo, double hi, std::size_t n);

/// n independent uniform draws on [lo, hi].
Vector random_locations(double lo, double hi, std::size_t n, Rng& rng);

/// Writes x,kl_forward,kl_reverse rows followed by a summary row whose x
/// field is "mean".
void write_report_rows(std::ostream& os, const MarginalReport& report);

}  // namespace cagm
