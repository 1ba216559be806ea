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

#include "cagm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cagm/errors.hpp"

namespace cagm {

namespace {

constexpr double kKink = 0.03;

double shifted_abs(double x) { return std::abs(x - kKink) + kKink; }

template <typename F>
double simpson(F f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

template <typename F>
double integrate_split(F f, double lo, double hi) {
  if (lo < kKink && kKink < hi) return simpson(f, lo, kKink, 20000) + simpson(f, kKink, hi, 20000);
  return simpson(f, lo, hi, 40000);
}

}  // namespace

std::string to_string(NoiseCase c) {
  switch (c) {
    case NoiseCase::homoscedastic: return "homoscedastic";
    case NoiseCase::heteroscedastic: return "heteroscedastic";
    case NoiseCase::non_additive: return "non_additive";
  }
  return "unknown";
}

NoiseCase parse_noise_case(std::string_view name) {
  if (name == "homoscedastic" || name == "i") return NoiseCase::homoscedastic;
  if (name == "heteroscedastic" || name == "ii") return NoiseCase::heteroscedastic;
  if (name == "non_additive" || name == "iii") return NoiseCase::non_additive;
  throw ConfigError("unknown noise case '" + std::string(name) + "'");
}

double regression_signal(double x) {
  const double s = shifted_abs(x);
  return std::log(10.0 * s) * std::sin(std::numbers::pi * s);
}

double heteroscedastic_envelope(double x, const RegressionSpec& spec) {
  return spec.epsilon_sd / std::exp(2.0 * shifted_abs(x));
}

double regression_signal_std(const RegressionSpec& spec) {
  const double width = spec.x_hi - spec.x_lo;
  const double mean = integrate_split(regression_signal, spec.x_lo, spec.x_hi) / width;
  const double var =
      integrate_split([mean](double x) { return std::pow(regression_signal(x) - mean, 2); },
                      spec.x_lo, spec.x_hi) /
      width;
  return std::sqrt(var);
}

namespace {

struct Quadrature {
  Vector nodes;
  Vector weights;
};

// Golub-Welsch for the probabilists' Hermite weight exp(-t^2/2)/sqrt(2 pi):
// E[g(t)] for t ~ N(0, 1) is sum_i w_i g(t_i).
const Quadrature& gauss_hermite() {
  static const Quadrature q = [] {
    constexpr Eigen::Index n = 64;
    Matrix jacobi = Matrix::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i)
      jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
    Quadrature out;
    out.nodes = eig.eigenvalues();
    out.weights = eig.eigenvectors().row(0).transpose().array().square();
    return out;
  }();
  return q;
}

}  // namespace

Moments regression_moments(NoiseCase noise, double x, const RegressionSpec& spec) {
  switch (noise) {
    case NoiseCase::homoscedastic: {
      const double sd = spec.homoscedastic_fraction * regression_signal_std(spec);
      return {regression_signal(x), sd * sd};
    }
    case NoiseCase::heteroscedastic: {
      const double sd = heteroscedastic_envelope(x, spec);
      return {regression_signal(x), sd * sd};
    }
    case NoiseCase::non_additive: {
      const Quadrature& q = gauss_hermite();
      const double sd = heteroscedastic_envelope(x, spec);
      const double s = shifted_abs(x);
      double m1 = 0.0, m2 = 0.0;
      for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
        const double delta = sd * q.nodes(i);
        const double y = std::log(10.0 * s) * std::sin(std::numbers::pi * s + 2.0 * delta) + delta;
        m1 += q.weights(i) * y;
        m2 += q.weights(i) * y * y;
      }
      return {m1, std::max(m2 - m1 * m1, 0.0)};
    }
  }
  throw ConfigError("regression_moments: unknown noise case");
}

PairedDataset<double> noisy_regression_dataset(NoiseCase noise, std::size_t n, Rng& rng,
                                               const RegressionSpec& spec) {
  if (n == 0) throw ConfigError("regression dataset: n must be positive");
  if (!(spec.x_hi > spec.x_lo)) throw ConfigError("regression dataset: empty interval");
  const double homo_sd = spec.homoscedastic_fraction * regression_signal_std(spec);
  PairedDataset<double> d;
  d.inputs.resize(static_cast<Eigen::Index>(n), 1);
  d.outputs.resize(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
    const double x = rng.uniform(spec.x_lo, spec.x_hi);
    const double eps = rng.normal();
    double y = 0.0;
    switch (noise) {
      case NoiseCase::homoscedastic:
        y = regression_signal(x) + homo_sd * eps;
        break;
      case NoiseCase::heteroscedastic:
        y = regression_signal(x) + heteroscedastic_envelope(x, spec) * eps;
        break;
      case NoiseCase::non_additive: {
        const double delta = heteroscedastic_envelope(x, spec) * eps;
        const double s = shifted_abs(x);
        y = std::log(10.0 * s) * std::sin(std::numbers::pi * s + 2.0 * delta) + delta;
        break;
      }
    }
    d.inputs(i, 0) = x;
    d.outputs(i, 0) = y;
  }
  return d;
}

double mu_high(double x) { return std::pow(6.0 * x - 2.0, 2) * std::sin(12.0 * x - 4.0); }

double mu_low(double x) { return 0.5 * mu_high(x) + 10.0 * (x - 0.5) - 5.0; }

void MultiFidelitySpec::validate() const {
  low.validate();
  high.validate();
  if (sensors.empty()) throw ConfigError("multifidelity: sensor set is empty");
  if (realizations == 0) throw ConfigError("multifidelity: realizations must be positive");
}

Vector multifidelity_mean(const MultiFidelitySpec&, const Vector& xs) {
  const Eigen::Index n = xs.size();
  Vector m(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = mu_low(xs(i));
    m(n + i) = mu_high(xs(i));
  }
  return m;
}

Matrix multifidelity_covariance(const MultiFidelitySpec& spec, const Vector& xs) {
  const Eigen::Index n = xs.size();
  const Matrix k_low = rbf_gram(xs, xs, spec.low);
  const Matrix k_high = rbf_gram(xs, xs, spec.high);
  Matrix cov(2 * n, 2 * n);
  cov.topLeftCorner(n, n) = k_low;
  cov.topRightCorner(n, n) = spec.rho * k_low;
  cov.bottomLeftCorner(n, n) = spec.rho * k_low.transpose();
  cov.bottomRightCorner(n, n) = spec.rho * spec.rho * k_low + k_high;
  return cov;
}

double high_fidelity_variance(const MultiFidelitySpec& spec) {
  return spec.rho * spec.rho * spec.low.sigma_f2 + spec.high.sigma_f2;
}

MultiFidelityData multifidelity_dataset(const MultiFidelitySpec& spec, Rng& rng) {
  spec.validate();
  const Vector xs = Eigen::Map<const Vector>(spec.sensors.data(),
                                             static_cast<Eigen::Index>(spec.sensors.size()));
  const Eigen::Index n = xs.size();
  const Matrix draws = sample_gp(multifidelity_mean(spec, xs), multifidelity_covariance(spec, xs),
                                 spec.realizations, rng);
  return {xs, draws.leftCols(n), draws.rightCols(n)};
}

PairedDataset<double> multifidelity_pairs(const MultiFidelityData& data) {
  const Eigen::Index r = data.low.rows();
  const Eigen::Index s = data.sensors.size();
  PairedDataset<double> d;
  d.inputs.resize(r * s, 2);
  d.outputs.resize(r * s, 1);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < s; ++j) {
      d.inputs(i * s + j, 0) = data.sensors(j);
      d.inputs(i * s + j, 1) = data.low(i, j);
      d.outputs(i * s + j, 0) = data.high(i, j);
    }
  return d;
}

PairedDataset<double> single_fidelity_pairs(const MultiFidelityData& data) {
  PairedDataset<double> d = multifidelity_pairs(data);
  d.inputs = d.inputs.leftCols(1).eval();
  return d;
}

Matrix sample_low_fidelity_paths(const MultiFidelitySpec& spec, const Vector& grid,
                                 std::size_t n_paths, Rng& rng) {
  Vector mean(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) mean(i) = mu_low(grid(i));
  return sample_gp(mean, rbf_gram(grid, grid, spec.low), n_paths, rng);
}

PairedDataset<double> benchmark_dataset(const BenchmarkSpec& spec, Rng& rng) {
  spec.kernel.validate();
  if (spec.paths == 0 || spec.points_per_path == 0)
    throw ConfigError("benchmark dataset: paths and points per path must be positive");
  const auto m = static_cast<Eigen::Index>(spec.points_per_path);
  const auto p = static_cast<Eigen::Index>(spec.paths);
  PairedDataset<double> d;
  d.inputs.resize(p * m, 1);
  d.outputs.resize(p * m, 1);
  for (Eigen::Index path = 0; path < p; ++path) {
    Vector xs(m), mean(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      xs(i) = rng.uniform(spec.x_lo, spec.x_hi);
      mean(i) = mu_high(xs(i));
    }
    const Matrix draw = sample_gp(mean, rbf_gram(xs, xs, spec.kernel), 1, rng);
    d.inputs.middleRows(path * m, m) = xs;
    d.outputs.middleRows(path * m, m) = draw.transpose();
  }
  return d;
}

std::string to_string(BurgersBoundary b) {
  return b == BurgersBoundary::periodic ? "periodic" : "dirichlet";
}

BurgersBoundary parse_burgers_boundary(std::string_view name) {
  if (name == "periodic") return BurgersBoundary::periodic;
  if (name == "dirichlet") return BurgersBoundary::dirichlet;
  throw ConfigError("burgers: unknown boundary treatment '" + std::string(name) + "'");
}

void BurgersSpec::validate() const {
  if (!(nu > 0.0)) throw ConfigError("burgers: viscosity must be positive");
  if (!(x_hi > x_lo)) throw ConfigError("burgers: empty domain");
  if (n_x < 4 || (n_x & (n_x - 1)) != 0) throw ConfigError("burgers: n_x must be a power of two");
  if (n_t == 0 || !(t_final > 0.0)) throw ConfigError("burgers: empty time grid");
  if (micro_steps == 0) throw ConfigError("burgers: micro_steps must be positive");
  ic_kernel.validate();
  if (anchors.empty()) throw ConfigError("burgers: anchor set is empty");
}

Vector BurgersSpec::grid() const {
  Vector x(static_cast<Eigen::Index>(n_x));
  const double dx = (x_hi - x_lo) / static_cast<double>(n_x);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = x_lo + dx * static_cast<double>(i);
  return x;
}

Vector BurgersSpec::times() const {
  Vector t(static_cast<Eigen::Index>(n_t));
  for (Eigen::Index j = 0; j < t.size(); ++j)
    t(j) = t_final * static_cast<double>(j + 1) / static_cast<double>(n_t);
  return t;
}

GaussianField conditional_gp_ic_moments(const BurgersSpec& spec) {
  spec.validate();
  const Vector x = spec.grid();
  const Vector xb = Eigen::Map<const Vector>(spec.anchors.data(),
                                             static_cast<Eigen::Index>(spec.anchors.size()));
  const Vector yb = Vector::Zero(xb.size());
  const Matrix k_bb = rbf_gram(xb, xb, spec.ic_kernel);
  const Matrix k_xb = rbf_gram(x, xb, spec.ic_kernel);
  Eigen::LLT<Matrix> llt(k_bb);
  if (llt.info() != Eigen::Success)
    throw NotPsdError("conditional ic: anchor Gram matrix is singular (duplicate anchors?)", 0.0);
  GaussianField f;
  f.mean = k_xb * llt.solve(yb);
  f.cov = rbf_gram(x, x, spec.ic_kernel) - k_xb * llt.solve(k_xb.transpose());
  f.cov = (0.5 * (f.cov + f.cov.transpose())).eval();
  return f;
}

Matrix conditional_gp_ic(const BurgersSpec& spec, std::size_t n_samples, Rng& rng) {
  const GaussianField f = conditional_gp_ic_moments(spec);
  return sample_gp(f.mean, f.cov, n_samples, rng);
}

}  // namespace cagm
