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

#include "cagm/dataset.hpp"
#include "cagm/random.hpp"
#include "cagm/synthetic.hpp"

namespace cagm {

struct BurgersSolution {
  Vector times;  // n_t snapshot times (t_0 = 0 is the initial condition, not stored)
  Matrix u;      // n_t x n_x
  double max_boundary_abs = 0.0;  // max |u(t, x_lo)| over the stored snapshots
};

/// Solves u_t + u u_x - nu u_xx = 0 on the grid of `spec` with a Fourier
/// pseudo-spectral discretization (2/3 dealiased nonlinear term) and
/// fourth-order exponential time differencing (ETDRK4). With Dirichlet
/// boundaries the first grid value of u0 is ignored (taken as zero). Throws
/// SolverDivergenceError on a non-finite state.
BurgersSolution burgers_solve(const Vector& u0, const BurgersSpec& spec);

struct BurgersDataset {
  PairedDataset<double> train;                 // x = normalized time, y = snapshot
  std::vector<Matrix> solutions;               // per realization, n_t x n_x
  Vector times;                                // stored solver times
  std::vector<std::size_t> train_snapshots;    // indices into `times`, sorted
  std::vector<std::size_t> heldout_snapshots;  // the remaining indices, sorted
  double time_scale = 1.0;                     // t_norm = time_scale * t + time_offset
  double time_offset = 0.0;
  double max_boundary_abs = 0.0;

  double normalize_time(double t) const { return time_scale * t + time_offset; }
};

/// Snapshot indices of t = 12.5, 25, 37.5 and 50 on the default time grid
/// (any stored time that is a multiple of t_final / 4).
std::vector<std::size_t> quarter_time_snapshots(const BurgersSpec& spec);

/// Simulates n_realizations initial conditions and keeps n_train_snapshots
/// randomly selected snapshot times for training. The split draws from
/// `split_rng` only; with `reserve_quarter_times` the quarter times are
/// always held out.
BurgersDataset burgers_dataset(const BurgersSpec& spec, std::size_t n_realizations,
                               std::size_t n_train_snapshots, Rng& data_rng, Rng& split_rng,
                               bool reserve_quarter_times = true);

}  // namespace cagm
