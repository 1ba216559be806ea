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

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "cagm/errors.hpp"
#include "cagm/tape.hpp"

namespace cagm {

/// Scalar-valued graph over a list of parameter arrays.
template <typename Scalar>
using ScalarGraph = std::function<typename Tape<Scalar>::Var(
    Tape<Scalar>&, std::span<const typename Tape<Scalar>::Var>)>;

/// Maximum component-wise relative discrepancy between reverse-mode
/// gradients and central differences with step h. The relative error uses
/// the denominator max(|analytic|, |numeric|, 1e-8).
template <typename Scalar>
Scalar grad_check(const ScalarGraph<Scalar>& graph, std::vector<MatrixX<Scalar>> params,
                  Scalar h) {
  using Var = typename Tape<Scalar>::Var;
  if (!(h > 0)) throw ConfigError("grad_check: perturbation must be positive");

  auto evaluate = [&](bool trainable, std::vector<MatrixX<Scalar>>* grads) {
    Tape<Scalar> tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(trainable ? tape.variable(p) : tape.constant(p));
    Var out = graph(tape, std::span<const Var>(vars));
    const Scalar value = tape.scalar(out);
    if (!std::isfinite(static_cast<double>(value)))
      throw EvaluationError("grad_check: function value is not finite");
    if (grads) {
      tape.backward(out);
      grads->clear();
      for (Var v : vars) grads->push_back(tape.grad(v));
    }
    return value;
  };

  std::vector<MatrixX<Scalar>> analytic;
  evaluate(true, &analytic);

  Scalar worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      Scalar& entry = params[k].data()[i];
      const Scalar saved = entry;
      entry = saved + h;
      const Scalar up = evaluate(false, nullptr);
      entry = saved - h;
      const Scalar down = evaluate(false, nullptr);
      entry = saved;
      const Scalar numeric = (up - down) / (Scalar(2) * h);
      const Scalar a = analytic[k].data()[i];
      const Scalar denom = std::max({std::abs(a), std::abs(numeric), Scalar(1e-8)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace cagm
