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
#include <cstdint>

#include "cagm/gp_sampling.hpp"

namespace cagm {

struct GpFitOptions {
  std::size_t restarts = 5;
  std::size_t steps = 500;
  double learning_rate = 0.05;  // Adam step in log-parameter space
  std::uint64_t seed = 0;       // restart perturbations
};

/// Exact GP regression with a squared-exponential kernel, Gaussian
/// likelihood and zero prior mean on centered targets.
struct GpRegressor {
  GpSpec kernel;
  double noise_variance = 0.0;
  Vector x;
  Vector y;             // original (uncentered) targets
  double y_mean = 0.0;
  Matrix lower;         // Cholesky factor of K + (noise + jitter) I
  double jitter = 0.0;
  Vector alpha;         // (K + noise I)^-1 (y - y_mean)
  double log_marginal_likelihood = 0.0;
};

struct GpPrediction {
  Vector mean;
  Vector latent_variance;      // k(x*,x*) - k*^T (K + noise I)^-1 k*
  Vector predictive_variance;  // latent + noise
};

/// Conditions a GP with fixed hyperparameters on (x, y).
GpRegressor gp_condition(const Vector& x, const Vector& y, const GpSpec& kernel,
                         double noise_variance);

/// Log marginal likelihood of centered targets under the given hyperparameters.
double gp_log_marginal_likelihood(const Vector& x, const Vector& y, const GpSpec& kernel,
                                  double noise_variance);

/// Maximizes the log marginal likelihood over (sigma_f^2, l^2, sigma_n^2) by
/// multi-start Adam ascent on log parameters with analytic gradients. The
/// first start is the given initialization; the best restart is kept and
/// the result never scores below the initialization. Throws
/// IllConditionedDataError if no restart yields a factorizable matrix.
GpRegressor gp_fit(const Vector& x, const Vector& y, const GpSpec& init, double noise_init,
                   const GpFitOptions& options = {});

GpPrediction gp_predict(const GpRegressor& model, const Vector& x_star);

}  // namespace cagm
