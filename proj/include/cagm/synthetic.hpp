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
#include <string>
#include <string_view>
#include <vector>

#include "cagm/dataset.hpp"
#include "cagm/gp_sampling.hpp"
#include "cagm/random.hpp"

namespace cagm {

// ---------------------------------------------------------------------------
// Noisy regression
// ---------------------------------------------------------------------------

enum class NoiseCase { homoscedastic, heteroscedastic, non_additive };

std::string to_string(NoiseCase c);
NoiseCase parse_noise_case(std::string_view name);

struct RegressionSpec {
  double x_lo = -2.0;
  double x_hi = 2.0;
  /// Homoscedastic noise standard deviation as a fraction of the
  /// noise-free signal's standard deviation over [x_lo, x_hi].
  double homoscedastic_fraction = 0.05;
  /// Standard deviation of epsilon in delta(x) = epsilon / exp(2(|x - 0.03| + 0.03)).
  double epsilon_sd = 0.5;
};

/// log(10 s) sin(pi s) with s = |x - 0.03| + 0.03.
double regression_signal(double x);

/// Standard deviation of delta(x): epsilon_sd / exp(2(|x - 0.03| + 0.03)).
double heteroscedastic_envelope(double x, const RegressionSpec& spec = {});

/// Standard deviation of the noise-free signal over the input interval,
/// by composite Simpson quadrature split at the kink x = 0.03.
double regression_signal_std(const RegressionSpec& spec = {});

/// n pairs with x ~ U[x_lo, x_hi] and y from the selected noise process.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of y | x for the given noise case. The
/// non-additive case is integrated over delta with 64-point Gauss-Hermite
/// quadrature.
Moments regression_moments(NoiseCase noise, double x, const RegressionSpec& spec = {});

PairedDataset<double> noisy_regression_dataset(NoiseCase noise, std::size_t n, Rng& rng,
                                               const RegressionSpec& spec = {});

// ---------------------------------------------------------------------------
// Two correlated Gaussian processes (low and high fidelity)
// ---------------------------------------------------------------------------

/// (6x - 2)^2 sin(12x - 4)
double mu_high(double x);
/// 0.5 mu_high(x) + 10(x - 0.5) - 5
double mu_low(double x);

struct MultiFidelitySpec {
  GpSpec low{0.1, 0.5};
  GpSpec high{0.5, 0.5};
  double rho = 0.8;
  std::vector<double> sensors{0.0, 0.4, 0.6, 1.0};
  std::size_t realizations = 50;

  void validate() const;
};

/// Stacked [low; high] mean over the given locations.
Vector multifidelity_mean(const MultiFidelitySpec& spec, const Vector& xs);

/// [[K_LL, K_LH], [K_LH^T, K_HH]] with K_LH = rho k_L and
/// K_HH = rho^2 k_L + k_H.
Matrix multifidelity_covariance(const MultiFidelitySpec& spec, const Vector& xs);

/// Exact marginal variance of the high-fidelity process.
double high_fidelity_variance(const MultiFidelitySpec& spec);

struct MultiFidelityData {
  Vector sensors;
  Matrix low;   // realizations x sensors
  Matrix high;  // realizations x sensors
};

MultiFidelityData multifidelity_dataset(const MultiFidelitySpec& spec, Rng& rng);

/// Rows ((x, y_L), y_H) for every realization and sensor.
PairedDataset<double> multifidelity_pairs(const MultiFidelityData& data);
/// Rows (x, y_H): the high-fidelity data alone.
PairedDataset<double> single_fidelity_pairs(const MultiFidelityData& data);

/// Joint low-fidelity paths over a grid, n_paths x |grid|.
Matrix sample_low_fidelity_paths(const MultiFidelitySpec& spec, const Vector& grid,
                                 std::size_t n_paths, Rng& rng);

// ---------------------------------------------------------------------------
// Sensitivity benchmark: g ~ GP(mu_high, k_high)
// ---------------------------------------------------------------------------

struct BenchmarkSpec {
  GpSpec kernel{0.5, 0.5};
  std::size_t paths = 100;
  std::size_t points_per_path = 100;
  double x_lo = 0.0;
  double x_hi = 1.0;
};

/// `paths` realizations, each observed at `points_per_path` uniform random
/// locations; one row per observation.
PairedDataset<double> benchmark_dataset(const BenchmarkSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Burgers equation with conditional-GP initial conditions
// ---------------------------------------------------------------------------

/// periodic: the domain is one period. dirichlet: u = 0 at x_lo and x_hi,
/// solved as the odd extension on a domain of twice the length.
enum class BurgersBoundary { periodic, dirichlet };

std::string to_string(BurgersBoundary b);
BurgersBoundary parse_burgers_boundary(std::string_view name);

struct BurgersSpec {
  double nu = 0.5;
  double x_lo = -7.0;
  double x_hi = 3.0;
  std::size_t n_x = 128;
  std::size_t n_t = 256;
  double t_final = 50.0;
  GpSpec ic_kernel{0.005, 1.0};
  std::vector<double> anchors{-7.0, -6.5, 2.5, 3.0};
  std::size_t micro_steps = 4;  // integrator steps per stored snapshot
  BurgersBoundary boundary = BurgersBoundary::periodic;

  void validate() const;
  /// Uniform grid x_i = x_lo + i (x_hi - x_lo) / n_x (x_hi itself is not stored).
  Vector grid() const;
  /// Stored snapshot times t_j = j t_final / n_t, j = 1..n_t.
  Vector times() const;
};

struct GaussianField {
  Vector mean;
  Matrix cov;
};

/// Prior conditioned on u(anchors) = 0: mean k(x,x_b) K^-1 y_b (= 0) and
/// covariance k(x,x) - k(x,x_b) K^-1 k(x_b,x) over the solver grid.
GaussianField conditional_gp_ic_moments(const BurgersSpec& spec);

/// n_samples x n_x initial conditions.
Matrix conditional_gp_ic(const BurgersSpec& spec, std::size_t n_samples, Rng& rng);

}  // namespace cagm
