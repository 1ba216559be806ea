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

#include "cagm/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "cagm/errors.hpp"

namespace cagm {

namespace {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

class SpectralBurgers {
 public:
  SpectralBurgers(Eigen::Index n, double length, double nu, double h) : n_(n) {
    ik_.resize(n_);
    dealias_.resize(n_);
    Eigen::VectorXd lin(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      // wavenumber index in FFT order, Nyquist mode set to zero
      const Eigen::Index m = j < n_ / 2 ? j : (j == n_ / 2 ? 0 : j - n_);
      const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / length;
      ik_(j) = Complex(0.0, k);
      lin(j) = -nu * k * k;
      dealias_(j) = (std::abs(m) < n_ / 3 && j != n_ / 2) ? 1.0 : 0.0;
    }
    // ETDRK4 coefficients by contour integral over M points on the unit
    // circle around each h L (Kassam & Trefethen).
    constexpr int kContour = 64;
    e_.resize(n_);
    e2_.resize(n_);
    q_.resize(n_);
    f1_.resize(n_);
    f2_.resize(n_);
    f3_.resize(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double hl = h * lin(j);
      e_(j) = std::exp(hl);
      e2_(j) = std::exp(hl / 2.0);
      Complex q = 0, a = 0, b = 0, c = 0;
      for (int r = 0; r < kContour; ++r) {
        const Complex root = std::exp(Complex(0.0, std::numbers::pi * (r + 0.5) / kContour));
        const Complex lr = hl + root;
        const Complex elr = std::exp(lr);
        q += (std::exp(lr / 2.0) - 1.0) / lr;
        a += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr * lr)) / (lr * lr * lr);
        b += (2.0 + lr + elr * (-2.0 + lr)) / (lr * lr * lr);
        c += (-4.0 - 3.0 * lr - lr * lr + elr * (4.0 - lr)) / (lr * lr * lr);
      }
      q_(j) = h * (q / double(kContour)).real();
      f1_(j) = h * (a / double(kContour)).real();
      f2_(j) = h * (b / double(kContour)).real();
      f3_(j) = h * (c / double(kContour)).real();
    }
  }

  ComplexVector to_spectral(const Eigen::VectorXd& u) {
    ComplexVector in = u.cast<Complex>();
    ComplexVector out(n_);
    fft_.fwd(out, in);
    return out;
  }

  Eigen::VectorXd to_physical(const ComplexVector& v) {
    ComplexVector out(n_);
    fft_.inv(out, v);
    return out.real();
  }

  /// -1/2 i k F[(F^-1 v)^2], dealiased.
  ComplexVector nonlinear(const ComplexVector& v) {
    ComplexVector filtered = v.cwiseProduct(dealias_.cast<Complex>());
    const Eigen::VectorXd u = to_physical(filtered);
    const ComplexVector u2 = to_spectral(u.cwiseAbs2());
    return (-0.5 * ik_.array() * u2.array() * dealias_.array().cast<Complex>()).matrix();
  }

  void step(ComplexVector& v) {
    const ComplexVector nv = nonlinear(v);
    const ComplexVector a = (e2_.array() * v.array() + q_.array() * nv.array()).matrix();
    const ComplexVector na = nonlinear(a);
    const ComplexVector b = (e2_.array() * v.array() + q_.array() * na.array()).matrix();
    const ComplexVector nb = nonlinear(b);
    const ComplexVector c =
        (e2_.array() * a.array() + q_.array() * (2.0 * nb.array() - nv.array())).matrix();
    const ComplexVector nc = nonlinear(c);
    v = (e_.array() * v.array() + f1_.array() * nv.array() +
         2.0 * f2_.array() * (na.array() + nb.array()) + f3_.array() * nc.array())
            .matrix();
  }

 private:
  Eigen::Index n_;
  Eigen::FFT<double> fft_;
  ComplexVector ik_;
  Eigen::VectorXd dealias_, e_, e2_, q_, f1_, f2_, f3_;
};

}  // namespace

BurgersSolution burgers_solve(const Vector& u0, const BurgersSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n_x);
  if (u0.size() != n)
    throw DimensionError("burgers: initial condition has " + std::to_string(u0.size()) +
                         " points, grid has " + std::to_string(spec.n_x));
  if (!u0.allFinite()) throw SolverDivergenceError("burgers: non-finite initial condition", 0);
  const bool odd = spec.boundary == BurgersBoundary::dirichlet;
  const double length = spec.x_hi - spec.x_lo;
  const Eigen::Index n_ext = odd ? 2 * n : n;
  Eigen::VectorXd start = u0;
  if (odd) {
    // u(x_lo) = u(x_hi) = 0, mirrored with a sign flip about x_hi
    start = Eigen::VectorXd::Zero(n_ext);
    start.segment(1, n - 1) = u0.segment(1, n - 1);
    for (Eigen::Index i = 1; i < n; ++i) start(n + i) = -u0(n - i);
  }
  const double h = spec.t_final / static_cast<double>(spec.n_t * spec.micro_steps);
  SpectralBurgers solver(n_ext, odd ? 2.0 * length : length, spec.nu, h);
  BurgersSolution sol;
  sol.times = spec.times();
  sol.u.resize(static_cast<Eigen::Index>(spec.n_t), n);
  ComplexVector v = solver.to_spectral(start);
  for (std::size_t j = 0; j < spec.n_t; ++j) {
    for (std::size_t s = 0; s < spec.micro_steps; ++s) solver.step(v);
    const Eigen::VectorXd u = solver.to_physical(v);
    if (!u.allFinite())
      throw SolverDivergenceError("burgers: non-finite state at snapshot " + std::to_string(j + 1),
                                  j + 1);
    sol.u.row(static_cast<Eigen::Index>(j)) = u.head(n).transpose();
    sol.max_boundary_abs = std::max(sol.max_boundary_abs, std::abs(u(0)));
  }
  return sol;
}

std::vector<std::size_t> quarter_time_snapshots(const BurgersSpec& spec) {
  std::vector<std::size_t> out;
  if (spec.n_t % 4 != 0) return out;
  for (std::size_t q = 1; q <= 4; ++q) out.push_back(q * spec.n_t / 4 - 1);
  return out;
}

BurgersDataset burgers_dataset(const BurgersSpec& spec, std::size_t n_realizations,
                               std::size_t n_train_snapshots, Rng& data_rng, Rng& split_rng,
                               bool reserve_quarter_times) {
  spec.validate();
  if (n_realizations == 0) throw ConfigError("burgers dataset: no realizations requested");
  if (n_train_snapshots == 0 || n_train_snapshots > spec.n_t)
    throw ConfigError("burgers dataset: n_train_snapshots must be in [1, n_t]");

  BurgersDataset ds;
  ds.times = spec.times();
  ds.time_scale = 2.0 / spec.t_final;
  ds.time_offset = -1.0;

  const Matrix ics = conditional_gp_ic(spec, n_realizations, data_rng);
  ds.solutions.reserve(n_realizations);
  for (Eigen::Index r = 0; r < ics.rows(); ++r) {
    BurgersSolution sol = burgers_solve(ics.row(r).transpose(), spec);
    ds.max_boundary_abs = std::max(ds.max_boundary_abs, sol.max_boundary_abs);
    ds.solutions.push_back(std::move(sol.u));
  }

  std::vector<std::size_t> reserved;
  if (reserve_quarter_times) reserved = quarter_time_snapshots(spec);
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < spec.n_t; ++j)
    if (std::find(reserved.begin(), reserved.end(), j) == reserved.end()) candidates.push_back(j);
  if (n_train_snapshots > candidates.size())
    throw ConfigError("burgers dataset: not enough snapshots outside the reserved set");
  // partial Fisher-Yates driven by split_rng
  for (std::size_t i = 0; i < n_train_snapshots; ++i) {
    const std::size_t k = i + static_cast<std::size_t>(split_rng.index(candidates.size() - i));
    std::swap(candidates[i], candidates[k]);
  }
  ds.train_snapshots.assign(candidates.begin(),
                            candidates.begin() + static_cast<std::ptrdiff_t>(n_train_snapshots));
  std::sort(ds.train_snapshots.begin(), ds.train_snapshots.end());
  for (std::size_t j = 0; j < spec.n_t; ++j)
    if (!std::binary_search(ds.train_snapshots.begin(), ds.train_snapshots.end(), j))
      ds.heldout_snapshots.push_back(j);

  const auto rows = static_cast<Eigen::Index>(n_realizations * n_train_snapshots);
  const auto nx = static_cast<Eigen::Index>(spec.n_x);
  ds.train.inputs.resize(rows, 1);
  ds.train.outputs.resize(rows, nx);
  ds.train.labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index row = 0;
  for (std::size_t r = 0; r < n_realizations; ++r)
    for (std::size_t j : ds.train_snapshots) {
      const double t = ds.times(static_cast<Eigen::Index>(j));
      ds.train.inputs(row, 0) = ds.normalize_time(t);
      ds.train.outputs.row(row) = ds.solutions[r].row(static_cast<Eigen::Index>(j));
      ds.train.labels.push_back(t);
      ++row;
    }
  return ds;
}

}  // namespace cagm
