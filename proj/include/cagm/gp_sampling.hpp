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
#include <vector>

#include <Eigen/Core>

#include "cagm/linalg.hpp"
#include "cagm/random.hpp"

namespace cagm {

/// Squared-exponential kernel hyperparameters: sigma_f^2 and l^2.
struct GpSpec {
  double sigma_f2 = 1.0;
  double l2 = 1.0;

  void validate() const;
};

/// sigma_f^2 exp(-(x - x')^2 / (2 l^2)). Throws ConfigError unless both
/// hyperparameters are positive.
double rbf_kernel(double x, double x_prime, const GpSpec& spec);

/// Gram matrix K_ij = k(a_i, b_j).
Matrix rbf_gram(const Vector& a, const Vector& b, const GpSpec& spec);

struct CholeskyResult {
  Matrix lower;        // L with L L^T = cov + jitter I
  double jitter = 0.0; // absolute diagonal inflation that was needed
};

/// Jitter schedule relative to the largest diagonal entry: 0, then
/// 1e-10 ... 1e-6. Throws NotPsdError (with the smallest eigenvalue) when
/// every attempt fails.
CholeskyResult cholesky_with_jitter(const Matrix& cov);

/// n_samples x n draws of mean + L xi. An all-zero covariance is a
/// point mass: every draw equals the mean.
Matrix sample_gp(const Vector& mean, const Matrix& cov, std::size_t n_samples, Rng& rng);

}  // namespace cagm
