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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cagm/errors.hpp"
#include "cagm/tape.hpp"

namespace cagm {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments, one accumulator pair per parameter.
template <typename Scalar>
class Adam {
 public:
  using Matrix = MatrixX<Scalar>;

  Adam() = default;

  Adam(std::span<const Matrix> params, AdamOptions options) : options_(options) {
    if (!(options.learning_rate > 0) || !(options.beta1 > 0 && options.beta1 < 1) ||
        !(options.beta2 > 0 && options.beta2 < 1) || !(options.epsilon > 0))
      throw ConfigError("adam: invalid hyperparameters");
    for (const Matrix& p : params) {
      first_.push_back(Matrix::Zero(p.rows(), p.cols()));
      second_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }

  const AdamOptions& options() const noexcept { return options_; }
  std::size_t step_count() const noexcept { return t_; }
  const std::vector<Matrix>& first_moments() const noexcept { return first_; }
  const std::vector<Matrix>& second_moments() const noexcept { return second_; }

  /// One descent step params -= lr * m_hat / (sqrt(v_hat) + eps). Gradients
  /// are validated before anything is modified.
  void step(std::span<Matrix> params, std::span<const Matrix> grads) {
    if (params.size() != first_.size() || grads.size() != first_.size())
      throw DimensionError("adam: parameter count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (grads[i].rows() != first_[i].rows() || grads[i].cols() != first_[i].cols() ||
          params[i].rows() != first_[i].rows() || params[i].cols() != first_[i].cols())
        throw DimensionError("adam: shape mismatch at parameter " + std::to_string(i));
      if (!grads[i].allFinite())
        throw TrainingDivergenceError(
            "adam: non-finite gradient at optimizer step " + std::to_string(t_ + 1), t_ + 1);
    }
    ++t_;
    const Scalar b1 = static_cast<Scalar>(options_.beta1);
    const Scalar b2 = static_cast<Scalar>(options_.beta2);
    const Scalar lr = static_cast<Scalar>(options_.learning_rate);
    const Scalar eps = static_cast<Scalar>(options_.epsilon);
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(options_.beta1, double(t_)));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(options_.beta2, double(t_)));
    for (std::size_t i = 0; i < grads.size(); ++i) {
      first_[i] = b1 * first_[i] + (Scalar(1) - b1) * grads[i];
      second_[i] = b2 * second_[i] + (Scalar(1) - b2) * grads[i].cwiseAbs2();
      params[i].array() -= lr * (first_[i].array() / c1) /
                           ((second_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  AdamOptions options_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::size_t t_ = 0;
};

}  // namespace cagm
