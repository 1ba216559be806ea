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

#include "cagm/gp_regressor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cagm/errors.hpp"
#include "cagm/random.hpp"

namespace cagm {

namespace {

constexpr double kLogMin = -23.0;  // ~1e-10
constexpr double kLogMax = 12.0;

using LogParams = std::array<double, 3>;  // log sigma_f^2, log l^2, log sigma_n^2

struct Evaluation {
  bool ok = false;
  double lml = 0.0;
  LogParams grad{};
};

void check_data(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw DimensionError("gp: " + std::to_string(x.size()) + " inputs but " +
                         std::to_string(y.size()) + " targets");
  if (x.size() < 2) throw ConfigError("gp: need at least two training points");
  if (!x.allFinite() || !y.allFinite()) throw ConfigError("gp: non-finite training data");
}

Matrix squared_distances(const Vector& x) {
  return (x.replicate(1, x.size()).rowwise() - x.transpose()).array().square().matrix();
}

Evaluation evaluate(const Matrix& d2, const Vector& yc, const LogParams& p, bool with_grad) {
  Evaluation ev;
  const double sf2 = std::exp(p[0]);
  const double l2 = std::exp(p[1]);
  const double sn2 = std::exp(p[2]);
  const Matrix kf = sf2 * (-d2.array() / (2.0 * l2)).exp().matrix();
  const auto n = yc.size();
  Matrix k = kf;
  k.diagonal().array() += sn2;
  CholeskyResult chol;
  try {
    chol = cholesky_with_jitter(k);
  } catch (const NotPsdError&) {
    return ev;
  }
  const auto llt = chol.lower.triangularView<Eigen::Lower>();
  Vector alpha = llt.solve(yc);
  chol.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
  ev.lml = -0.5 * yc.dot(alpha) - chol.lower.diagonal().array().log().sum() -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(ev.lml)) return ev;
  ev.ok = true;
  if (!with_grad) return ev;
  Matrix kinv = Matrix::Identity(n, n);
  llt.solveInPlace(kinv);
  chol.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
  // d lml / d theta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
  const Matrix w = alpha * alpha.transpose() - kinv;
  ev.grad[0] = 0.5 * (w.array() * kf.array()).sum();
  ev.grad[1] = 0.5 * (w.array() * kf.array() * d2.array()).sum() / (2.0 * l2);
  ev.grad[2] = 0.5 * sn2 * w.trace();
  return ev;
}

LogParams to_log(const GpSpec& k, double noise) {
  const double tiny = std::exp(kLogMin);
  return {std::log(std::max(k.sigma_f2, tiny)), std::log(std::max(k.l2, tiny)),
          std::log(std::max(noise, tiny))};
}

}  // namespace

GpRegressor gp_condition(const Vector& x, const Vector& y, const GpSpec& kernel,
                         double noise_variance) {
  check_data(x, y);
  kernel.validate();
  if (!(noise_variance >= 0.0)) throw ConfigError("gp: noise variance must be non-negative");
  GpRegressor m;
  m.kernel = kernel;
  m.noise_variance = noise_variance;
  m.x = x;
  m.y = y;
  m.y_mean = y.mean();
  const Vector yc = y.array() - m.y_mean;
  Matrix k = rbf_gram(x, x, kernel);
  k.diagonal().array() += noise_variance;
  CholeskyResult chol = cholesky_with_jitter(k);
  m.lower = std::move(chol.lower);
  m.jitter = chol.jitter;
  const auto llt = m.lower.triangularView<Eigen::Lower>();
  m.alpha = llt.solve(yc);
  m.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(m.alpha);
  m.log_marginal_likelihood = -0.5 * yc.dot(m.alpha) - m.lower.diagonal().array().log().sum() -
                              0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
  return m;
}

double gp_log_marginal_likelihood(const Vector& x, const Vector& y, const GpSpec& kernel,
                                  double noise_variance) {
  return gp_condition(x, y, kernel, noise_variance).log_marginal_likelihood;
}

GpRegressor gp_fit(const Vector& x, const Vector& y, const GpSpec& init, double noise_init,
                   const GpFitOptions& options) {
  check_data(x, y);
  init.validate();
  if (!(noise_init >= 0.0)) throw ConfigError("gp: noise variance must be non-negative");
  if (options.restarts == 0) throw ConfigError("gp: restarts must be positive");
  const Matrix d2 = squared_distances(x);
  const Vector yc = y.array() - y.mean();

  Rng rng(options.seed, Rng::fnv1a("gp-fit"));
  const LogParams start = to_log(init, noise_init);
  bool any_ok = false;
  LogParams best_p{};
  double best_lml = -std::numeric_limits<double>::infinity();
  const Evaluation at_init = evaluate(d2, yc, start, false);
  if (at_init.ok) {
    any_ok = true;
    best_p = start;
    best_lml = at_init.lml;
  }

  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    LogParams p = start;
    if (r > 0)
      for (double& v : p) v += rng.normal();
    LogParams m{}, s{};
    for (std::size_t t = 1; t <= options.steps + 1; ++t) {
      const Evaluation ev = evaluate(d2, yc, p, t <= options.steps);
      if (!ev.ok) break;
      any_ok = true;
      if (ev.lml > best_lml) {
        best_lml = ev.lml;
        best_p = p;
      }
      if (t > options.steps) break;
      for (std::size_t i = 0; i < 3; ++i) {
        m[i] = b1 * m[i] + (1 - b1) * ev.grad[i];
        s[i] = b2 * s[i] + (1 - b2) * ev.grad[i] * ev.grad[i];
        const double mh = m[i] / (1 - std::pow(b1, double(t)));
        const double sh = s[i] / (1 - std::pow(b2, double(t)));
        p[i] = std::clamp(p[i] + options.learning_rate * mh / (std::sqrt(sh) + eps), kLogMin, kLogMax);
      }
    }
  }
  if (!any_ok)
    throw IllConditionedDataError("gp_fit: no restart produced a factorizable kernel matrix");
  return gp_condition(x, y, GpSpec{std::exp(best_p[0]), std::exp(best_p[1])}, std::exp(best_p[2]));
}

GpPrediction gp_predict(const GpRegressor& model, const Vector& x_star) {
  if (model.alpha.size() != model.x.size()) throw ContractViolation("gp_predict: model not fitted");
  const Matrix ks = rbf_gram(model.x, x_star, model.kernel);  // n x m
  GpPrediction out;
  out.mean = (ks.transpose() * model.alpha).array() + model.y_mean;
  const Matrix v = model.lower.triangularView<Eigen::Lower>().solve(ks);
  out.latent_variance =
      (model.kernel.sigma_f2 - v.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
  out.predictive_variance = out.latent_variance.array() + model.noise_variance;
  return out;
}

}  // namespace cagm
