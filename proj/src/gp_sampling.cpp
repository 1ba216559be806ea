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

#include "cagm/gp_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cagm/errors.hpp"

namespace cagm {

void GpSpec::validate() const {
  if (!(sigma_f2 > 0.0) || !(l2 > 0.0))
    throw ConfigError("gp spec: sigma_f2 and l2 must be positive");
}

namespace {

double rbf_unchecked(double x, double x_prime, const GpSpec& spec) {
  const double d = x - x_prime;
  return spec.sigma_f2 * std::exp(-d * d / (2.0 * spec.l2));
}

}  // namespace

double rbf_kernel(double x, double x_prime, const GpSpec& spec) {
  spec.validate();
  return rbf_unchecked(x, x_prime, spec);
}

Matrix rbf_gram(const Vector& a, const Vector& b, const GpSpec& spec) {
  spec.validate();
  Matrix k(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) k(i, j) = rbf_unchecked(a(i), b(j), spec);
  return k;
}

CholeskyResult cholesky_with_jitter(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("cholesky: matrix is not square");
  if (cov.rows() == 0) throw DimensionError("cholesky: empty matrix");
  const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const Matrix sym = 0.5 * (cov + cov.transpose());
  const Matrix identity = Matrix::Identity(cov.rows(), cov.cols());
  for (double rel : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    const double jitter = rel * scale;
    Eigen::LLT<Matrix> llt(sym + jitter * identity);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite())
      return {llt.matrixL().toDenseMatrix(), jitter};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  throw NotPsdError("cholesky: matrix is not positive semi-definite (smallest eigenvalue " +
                        std::to_string(min_eig) + ")",
                    min_eig);
}

Matrix sample_gp(const Vector& mean, const Matrix& cov, std::size_t n_samples, Rng& rng) {
  const Eigen::Index n = mean.size();
  if (n < 1) throw DimensionError("sample_gp: empty mean");
  if (cov.rows() != n || cov.cols() != n)
    throw DimensionError("sample_gp: covariance must be " + std::to_string(n) + " x " +
                         std::to_string(n));
  const auto rows = static_cast<Eigen::Index>(n_samples);
  Matrix out = mean.transpose().replicate(rows, 1);
  if (cov.cwiseAbs().maxCoeff() == 0.0) return out;
  const Matrix lower = cholesky_with_jitter(cov).lower;
  const Matrix xi = rng.normal_matrix(rows, n);
  out.noalias() += xi * lower.transpose();
  return out;
}

}  // namespace cagm
