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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cagm/errors.hpp"
#include "cagm/random.hpp"
#include "cagm/tape.hpp"

namespace cagm {

/// Dense feed-forward network: tanh on every hidden layer, affine output.
///
/// Parameters are kept as one flat list [W0, b0, W1, b1, ...] with W_i of
/// shape (widths[i], widths[i+1]) and b_i of shape (1, widths[i+1]), which
/// is also the order used by bind(), the optimizer and checkpoints.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = MatrixX<Scalar>;
  using Var = typename Tape<Scalar>::Var;

  Mlp() = default;

  /// Zero-initialized network.
  explicit Mlp(std::vector<Eigen::Index> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw ConfigError("mlp: need at least input and output widths");
    for (Eigen::Index w : widths_)
      if (w <= 0) throw ConfigError("mlp: layer widths must be positive");
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
      params_.push_back(Matrix::Zero(widths_[i], widths_[i + 1]));
      params_.push_back(Matrix::Zero(1, widths_[i + 1]));
    }
  }

  const std::vector<Eigen::Index>& widths() const noexcept { return widths_; }
  Eigen::Index input_width() const { return widths_.front(); }
  Eigen::Index output_width() const { return widths_.back(); }
  std::size_t num_layers() const noexcept { return widths_.empty() ? 0 : widths_.size() - 1; }

  Matrix& weight(std::size_t layer) { return params_.at(2 * layer); }
  const Matrix& weight(std::size_t layer) const { return params_.at(2 * layer); }
  Matrix& bias(std::size_t layer) { return params_.at(2 * layer + 1); }
  const Matrix& bias(std::size_t layer) const { return params_.at(2 * layer + 1); }

  std::vector<Matrix>& parameters() noexcept { return params_; }
  const std::vector<Matrix>& parameters() const noexcept { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Matrix& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
  }

  /// Plain evaluation, batch x in -> batch x out.
  Matrix forward(const Matrix& input) const {
    check_input(input.cols());
    Matrix h = input;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      Matrix next = h * weight(l);
      next.rowwise() += bias(l).row(0);
      if (l + 1 < num_layers()) next = tanh_of(next);
      h = std::move(next);
    }
    return h;
  }

  /// Registers the parameters on a tape, as variables when trainable and
  /// as constants otherwise.
  std::vector<Var> bind(Tape<Scalar>& tape, bool trainable) const {
    std::vector<Var> vars;
    vars.reserve(params_.size());
    for (const Matrix& p : params_) vars.push_back(trainable ? tape.variable(p) : tape.constant(p));
    return vars;
  }

  /// Recorded evaluation using previously bound parameters.
  Var forward(Tape<Scalar>& tape, Var input, std::span<const Var> params) const {
    if (params.size() != params_.size())
      throw DimensionError("mlp: expected " + std::to_string(params_.size()) +
                           " bound parameter arrays, got " + std::to_string(params.size()));
    check_input(tape.value(input).cols());
    Var h = input;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      h = tape.affine(h, params[2 * l], params[2 * l + 1]);
      if (l + 1 < num_layers()) h = tape.tanh(h);
    }
    return h;
  }

 private:
  void check_input(Eigen::Index cols) const {
    if (widths_.empty()) throw ContractViolation("mlp: network has no layers");
    if (cols != widths_.front())
      throw DimensionError("mlp layer 0: expected input width " + std::to_string(widths_.front()) +
                           ", got " + std::to_string(cols));
  }

  std::vector<Eigen::Index> widths_;
  std::vector<Matrix> params_;
};

/// Normal Xavier initialization: W ~ N(0, 2 / (fan_in + fan_out)), b = 0.
template <typename Scalar>
Mlp<Scalar> xavier_init(std::span<const Eigen::Index> widths, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("xavier_init: need at least two widths");
  for (Eigen::Index w : widths)
    if (w <= 0) throw ConfigError("xavier_init: widths must be positive");
  Mlp<Scalar> net(std::vector<Eigen::Index>(widths.begin(), widths.end()));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(widths[l] + widths[l + 1]));
    auto& w = net.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(stddev * rng.normal());
  }
  return net;
}

template <typename Scalar>
Mlp<Scalar> xavier_init(std::span<const Eigen::Index> widths, std::uint64_t seed) {
  Rng rng(seed);
  return xavier_init<Scalar>(widths, rng);
}

/// Widths of a network with the given input, hidden layer sizes and output.
inline std::vector<Eigen::Index> layer_widths(Eigen::Index in, std::span<const Eigen::Index> hidden,
                                              Eigen::Index out) {
  std::vector<Eigen::Index> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace cagm
