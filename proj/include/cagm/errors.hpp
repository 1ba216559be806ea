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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cagm {

/// Shape mismatch between an array and the operation consuming it.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid hyperparameters, widths, grids or experiment settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke an API precondition (e.g. backward from a non-scalar).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A function under evaluation returned a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sample moments describe a point mass.
class DegenerateDistributionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covariance could not be factorized even at the largest jitter.
class NotPsdError : public std::runtime_error {
 public:
  NotPsdError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// GP hyperparameter search never produced a factorizable kernel matrix.
class IllConditionedDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The spectral PDE integrator produced a non-finite state.
class SolverDivergenceError : public std::runtime_error {
 public:
  SolverDivergenceError(const std::string& what, std::size_t time_index)
      : std::runtime_error(what), time_index_(time_index) {}
  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

/// Per-iteration losses recorded during adversarial training.
struct LossHistory {
  std::vector<double> discriminator;  // L_D (the maximized objective)
  std::vector<double> generator;      // L_G (the minimized objective)
  std::size_t saturated_logits = 0;

  std::size_t size() const noexcept { return discriminator.size(); }
  bool empty() const noexcept { return discriminator.empty(); }
};

/// Training produced a non-finite loss or gradient. Carries the partial
/// history up to (excluding) the failing iteration.
class TrainingDivergenceError : public std::runtime_error {
 public:
  TrainingDivergenceError(const std::string& what, std::size_t iteration,
                          LossHistory partial = {})
      : std::runtime_error(what), iteration_(iteration), partial_(std::move(partial)) {}
  std::size_t iteration() const noexcept { return iteration_; }
  const LossHistory& partial_history() const noexcept { return partial_; }

 private:
  std::size_t iteration_;
  LossHistory partial_;
};

/// Malformed, truncated or version-mismatched checkpoint/dataset file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cagm
