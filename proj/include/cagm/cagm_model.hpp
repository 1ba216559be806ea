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
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cagm/adam.hpp"
#include "cagm/dataset.hpp"
#include "cagm/errors.hpp"
#include "cagm/mlp.hpp"
#include "cagm/random.hpp"
#include "cagm/tape.hpp"

namespace cagm {

/// Logits are clamped to this magnitude before log-sigmoid.
inline constexpr double kLogitClamp = 30.0;

struct ModelArchitecture {
  Eigen::Index input_dim = 1;
  Eigen::Index output_dim = 1;
  Eigen::Index latent_dim = 1;
  std::vector<Eigen::Index> generator_hidden{100, 100, 100};
  std::vector<Eigen::Index> encoder_hidden{100, 100, 100};
  std::vector<Eigen::Index> discriminator_hidden{100, 100};
};

struct TrainConfig {
  double lambda = 1.5;         // entropic regularization, >= 1
  double beta = 0.0;           // residual penalty, >= 0
  std::size_t k_g = 1;         // generator/encoder steps per iteration
  std::size_t k_d = 1;         // discriminator steps per iteration
  double learning_rate = 1e-4;
  std::size_t batch_size = 0;  // 0 or >= N: the whole dataset every step
  std::size_t iterations = 20000;
  std::uint64_t seed = 0;
  std::size_t n_mc = 2000;

  void validate() const {
    if (!(lambda >= 1.0)) throw ConfigError("train: lambda must be >= 1");
    if (!(beta >= 0.0)) throw ConfigError("train: beta must be >= 0");
    if (k_g == 0 || k_d == 0) throw ConfigError("train: k_g and k_d must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
    if (n_mc == 0) throw ConfigError("train: n_mc must be positive");
  }
};

template <typename Scalar>
struct PredictiveStats {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> variance;
  std::size_t n_mc = 0;
};

/// Generator f(x, z) -> y, encoder f(x, y) -> z, discriminator T(x, y) -> logit.
template <typename Scalar>
struct CagmModel {
  Mlp<Scalar> generator;
  Mlp<Scalar> encoder;
  Mlp<Scalar> discriminator;
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  Eigen::Index latent_dim = 0;

  static CagmModel create(const ModelArchitecture& arch, Rng& rng) {
    if (arch.input_dim <= 0 || arch.output_dim <= 0 || arch.latent_dim <= 0)
      throw ConfigError("model: dimensions must be positive");
    CagmModel m;
    m.input_dim = arch.input_dim;
    m.output_dim = arch.output_dim;
    m.latent_dim = arch.latent_dim;
    Rng g = rng.split("generator");
    Rng e = rng.split("encoder");
    Rng d = rng.split("discriminator");
    m.generator = xavier_init<Scalar>(
        layer_widths(arch.input_dim + arch.latent_dim, arch.generator_hidden, arch.output_dim), g);
    m.encoder = xavier_init<Scalar>(
        layer_widths(arch.input_dim + arch.output_dim, arch.encoder_hidden, arch.latent_dim), e);
    m.discriminator = xavier_init<Scalar>(
        layer_widths(arch.input_dim + arch.output_dim, arch.discriminator_hidden, 1), d);
    m.validate();
    return m;
  }

  static CagmModel create(const ModelArchitecture& arch, std::uint64_t seed) {
    Rng rng(seed, Rng::fnv1a("model-init"));
    return create(arch, rng);
  }

  void validate() const {
    if (generator.input_width() != input_dim + latent_dim ||
        generator.output_width() != output_dim)
      throw DimensionError("model: generator widths inconsistent with (x, z) -> y");
    if (encoder.input_width() != input_dim + output_dim || encoder.output_width() != latent_dim)
      throw DimensionError("model: encoder widths inconsistent with (x, y) -> z");
    if (discriminator.input_width() != input_dim + output_dim ||
        discriminator.output_width() != 1)
      throw DimensionError("model: discriminator widths inconsistent with (x, y) -> logit");
  }

  template <typename Other>
  CagmModel<Other> cast() const {
    auto cast_net = [](const Mlp<Scalar>& net) {
      Mlp<Other> out(net.widths());
      for (std::size_t i = 0; i < net.parameters().size(); ++i)
        out.parameters()[i] = net.parameters()[i].template cast<Other>();
      return out;
    };
    CagmModel<Other> m;
    m.generator = cast_net(generator);
    m.encoder = cast_net(encoder);
    m.discriminator = cast_net(discriminator);
    m.input_dim = input_dim;
    m.output_dim = output_dim;
    m.latent_dim = latent_dim;
    return m;
  }
};

/// i.i.d. standard normal draws, n x latent_dim.
template <typename Scalar>
MatrixX<Scalar> sample_latent(Eigen::Index n, Eigen::Index latent_dim, Rng& rng) {
  if (n < 1 || latent_dim < 1) throw ConfigError("sample_latent: sizes must be positive");
  return rng.normal_matrix<Scalar>(n, latent_dim);
}

template <typename Scalar>
MatrixX<Scalar> hconcat(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
  if (a.rows() != b.rows()) throw DimensionError("concat: row counts differ");
  MatrixX<Scalar> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

/// y = f(x, z), evaluated row by row.
template <typename Scalar>
MatrixX<Scalar> generate(const CagmModel<Scalar>& model, const MatrixX<Scalar>& x,
                         const MatrixX<Scalar>& z) {
  if (x.rows() != z.rows()) throw DimensionError("generate: x and z row counts differ");
  if (x.cols() != model.input_dim)
    throw DimensionError("generate: x has width " + std::to_string(x.cols()) + ", model expects " +
                         std::to_string(model.input_dim));
  if (z.cols() != model.latent_dim)
    throw DimensionError("generate: z has width " + std::to_string(z.cols()) + ", model expects " +
                         std::to_string(model.latent_dim));
  return model.generator.forward(hconcat(x, z));
}

/// Discriminator objective on the tape (maximized over the discriminator):
///   mean log sigma(T(x, y_fake)) + mean log(1 - sigma(T(x, y_real))).
/// `y_fake` enters as data; the generator is not part of this graph.
template <typename Scalar>
typename Tape<Scalar>::Var discriminator_objective(
    Tape<Scalar>& tape, const CagmModel<Scalar>& model,
    std::span<const typename Tape<Scalar>::Var> disc_params, const MatrixX<Scalar>& x,
    const MatrixX<Scalar>& y_real, const MatrixX<Scalar>& y_fake,
    std::size_t* saturated = nullptr) {
  if (x.rows() != y_real.rows() || x.rows() != y_fake.rows())
    throw DimensionError("discriminator loss: batch sizes differ");
  const Scalar c = static_cast<Scalar>(kLogitClamp);
  auto fake_logits = model.discriminator.forward(tape, tape.constant(hconcat(x, y_fake)), disc_params);
  auto real_logits = model.discriminator.forward(tape, tape.constant(hconcat(x, y_real)), disc_params);
  if (saturated) {
    for (auto v : {fake_logits, real_logits}) {
      const auto& m = tape.value(v);
      for (Eigen::Index i = 0; i < m.size(); ++i)
        if (std::abs(m.data()[i]) > c) ++*saturated;
    }
  }
  auto fake_term = tape.mean(tape.log_sigmoid(tape.clamp(fake_logits, -c, c)));
  // log(1 - sigma(t)) = log sigma(-t)
  auto real_term =
      tape.mean(tape.log_sigmoid(tape.scale(tape.clamp(real_logits, -c, c), Scalar(-1))));
  return tape.add(fake_term, real_term);
}

/// Generator/encoder objective on the tape (minimized):
///   mean[ T(x, f(x,z)) + (lambda-1)/2 |z - f_enc(x, f(x,z))|^2 + beta |f(x,z) - y|^2 ].
/// The (1 - lambda) log q term uses a unit-variance Gaussian posterior
/// centred on the encoder output, constants dropped.
template <typename Scalar>
typename Tape<Scalar>::Var generator_objective(
    Tape<Scalar>& tape, const CagmModel<Scalar>& model,
    std::span<const typename Tape<Scalar>::Var> gen_params,
    std::span<const typename Tape<Scalar>::Var> enc_params,
    std::span<const typename Tape<Scalar>::Var> disc_params, const MatrixX<Scalar>& x,
    const MatrixX<Scalar>& y, const MatrixX<Scalar>& z, double lambda, double beta) {
  if (x.rows() != y.rows() || x.rows() != z.rows())
    throw DimensionError("generator loss: batch rows of x, y and z differ");
  auto xv = tape.constant(x);
  auto zv = tape.constant(z);
  auto y_fake = model.generator.forward(tape, tape.concat(xv, zv), gen_params);
  auto joint = tape.concat(xv, y_fake);
  auto adversarial = tape.mean(model.discriminator.forward(tape, joint, disc_params));
  auto loss = adversarial;
  if (lambda != 1.0) {
    auto z_hat = model.encoder.forward(tape, joint, enc_params);
    auto cycle = tape.mean(tape.row_sum(tape.square(tape.sub(zv, z_hat))));
    loss = tape.add(loss, tape.scale(cycle, static_cast<Scalar>((lambda - 1.0) / 2.0)));
  }
  if (beta != 0.0) {
    auto residual = tape.mean(tape.row_sum(tape.square(tape.sub(y_fake, tape.constant(y)))));
    loss = tape.add(loss, tape.scale(residual, static_cast<Scalar>(beta)));
  }
  return loss;
}

/// Discriminator objective value for a batch and latent draws.
template <typename Scalar>
Scalar discriminator_loss(const CagmModel<Scalar>& model, const MatrixX<Scalar>& x,
                          const MatrixX<Scalar>& y, const MatrixX<Scalar>& z,
                          std::size_t* saturated = nullptr) {
  Tape<Scalar> tape;
  auto d = model.discriminator.bind(tape, false);
  return tape.scalar(discriminator_objective<Scalar>(tape, model, d, x, y, generate(model, x, z),
                                                     saturated));
}

/// Generator objective value for a batch and latent draws.
template <typename Scalar>
Scalar generator_loss(const CagmModel<Scalar>& model, const MatrixX<Scalar>& x,
                      const MatrixX<Scalar>& y, const MatrixX<Scalar>& z, double lambda,
                      double beta) {
  if (!(lambda >= 1.0)) throw ConfigError("generator loss: lambda must be >= 1");
  Tape<Scalar> tape;
  auto g = model.generator.bind(tape, false);
  auto e = model.encoder.bind(tape, false);
  auto d = model.discriminator.bind(tape, false);
  return tape.scalar(generator_objective<Scalar>(tape, model, g, e, d, x, y, z, lambda, beta));
}

/// Alternating optimizer: three Adam states, one per network.
template <typename Scalar>
class Trainer {
 public:
  using Matrix = MatrixX<Scalar>;

  Trainer(CagmModel<Scalar>& model, const TrainConfig& config)
      : model_(model), config_(config) {
    config_.validate();
    model_.validate();
    AdamOptions opts;
    opts.learning_rate = config_.learning_rate;
    gen_opt_ = Adam<Scalar>(model_.generator.parameters(), opts);
    enc_opt_ = Adam<Scalar>(model_.encoder.parameters(), opts);
    disc_opt_ = Adam<Scalar>(model_.discriminator.parameters(), opts);
  }

  /// One ascent step on the discriminator objective. Returns its value
  /// before the update.
  Scalar discriminator_step(const Matrix& x, const Matrix& y, const Matrix& z) {
    Tape<Scalar> tape;
    auto d = model_.discriminator.bind(tape, true);
    auto objective = discriminator_objective<Scalar>(tape, model_, d, x, y,
                                                     generate(model_, x, z), &saturated_);
    const Scalar value = tape.scalar(objective);
    if (!std::isfinite(static_cast<double>(value)))
      throw TrainingDivergenceError("discriminator loss is not finite", 0);
    // maximize: descend on the negated objective
    tape.backward(tape.scale(objective, Scalar(-1)));
    disc_opt_.step(model_.discriminator.parameters(), gradients(tape, d));
    return value;
  }

  /// One descent step on the generator objective, updating generator and
  /// encoder jointly. Returns its value before the update.
  Scalar generator_step(const Matrix& x, const Matrix& y, const Matrix& z) {
    Tape<Scalar> tape;
    auto g = model_.generator.bind(tape, true);
    auto e = model_.encoder.bind(tape, config_.lambda != 1.0);
    auto d = model_.discriminator.bind(tape, false);
    auto objective = generator_objective<Scalar>(tape, model_, g, e, d, x, y, z, config_.lambda,
                                                 config_.beta);
    const Scalar value = tape.scalar(objective);
    if (!std::isfinite(static_cast<double>(value)))
      throw TrainingDivergenceError("generator loss is not finite", 0);
    tape.backward(objective);
    gen_opt_.step(model_.generator.parameters(), gradients(tape, g));
    enc_opt_.step(model_.encoder.parameters(), gradients(tape, e));
    return value;
  }

  /// Runs config.iterations iterations of k_d discriminator steps followed
  /// by k_g generator steps, each on a fresh minibatch and fresh latents.
  LossHistory run(const PairedDataset<Scalar>& data) {
    data.validate();
    if (data.size() == 0) throw ConfigError("train: dataset is empty");
    if (data.inputs.cols() != model_.input_dim || data.outputs.cols() != model_.output_dim)
      throw DimensionError("train: dataset widths do not match the model");
    Rng rng = Rng(config_.seed).split("train");
    LossHistory history;
    history.discriminator.reserve(config_.iterations);
    history.generator.reserve(config_.iterations);
    Matrix x, y;
    for (std::size_t it = 0; it < config_.iterations; ++it) {
      try {
        Scalar d_value = 0, g_value = 0;
        for (std::size_t k = 0; k < config_.k_d; ++k) {
          draw_batch(data, rng, x, y);
          d_value = discriminator_step(x, y, sample_latent<Scalar>(x.rows(), model_.latent_dim, rng));
        }
        for (std::size_t k = 0; k < config_.k_g; ++k) {
          draw_batch(data, rng, x, y);
          g_value = generator_step(x, y, sample_latent<Scalar>(x.rows(), model_.latent_dim, rng));
        }
        history.discriminator.push_back(static_cast<double>(d_value));
        history.generator.push_back(static_cast<double>(g_value));
      } catch (const TrainingDivergenceError& err) {
        history.saturated_logits = saturated_;
        throw TrainingDivergenceError(
            std::string(err.what()) + " at iteration " + std::to_string(it), it, history);
      }
    }
    history.saturated_logits = saturated_;
    return history;
  }

  std::size_t saturated_logits() const noexcept { return saturated_; }
  const Adam<Scalar>& generator_optimizer() const noexcept { return gen_opt_; }
  const Adam<Scalar>& encoder_optimizer() const noexcept { return enc_opt_; }
  const Adam<Scalar>& discriminator_optimizer() const noexcept { return disc_opt_; }

 private:
  static std::vector<Matrix> gradients(const Tape<Scalar>& tape,
                                       const std::vector<typename Tape<Scalar>::Var>& vars) {
    std::vector<Matrix> out;
    out.reserve(vars.size());
    for (auto v : vars) out.push_back(tape.grad(v));
    return out;
  }

  void draw_batch(const PairedDataset<Scalar>& data, Rng& rng, Matrix& x, Matrix& y) const {
    const auto n = static_cast<std::size_t>(data.size());
    if (config_.batch_size == 0 || config_.batch_size >= n) {
      if (x.rows() != data.inputs.rows()) {
        x = data.inputs;
        y = data.outputs;
      }
      return;
    }
    const auto b = static_cast<Eigen::Index>(config_.batch_size);
    x.resize(b, data.inputs.cols());
    y.resize(b, data.outputs.cols());
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto row = static_cast<Eigen::Index>(rng.index(n));
      x.row(i) = data.inputs.row(row);
      y.row(i) = data.outputs.row(row);
    }
  }

  CagmModel<Scalar>& model_;
  TrainConfig config_;
  Adam<Scalar> gen_opt_;
  Adam<Scalar> enc_opt_;
  Adam<Scalar> disc_opt_;
  std::size_t saturated_ = 0;
};

/// Trains the model in place and returns the per-iteration losses.
template <typename Scalar>
LossHistory train(CagmModel<Scalar>& model, const PairedDataset<Scalar>& data,
                  const TrainConfig& config) {
  Trainer<Scalar> trainer(model, config);
  return trainer.run(data);
}

/// Column means and 1/N variances of a sample matrix.
template <typename Scalar>
PredictiveStats<Scalar> sample_moments(const MatrixX<Scalar>& samples) {
  PredictiveStats<Scalar> s;
  s.n_mc = static_cast<std::size_t>(samples.rows());
  s.mean = samples.colwise().mean().transpose();
  s.variance = (samples.rowwise() - s.mean.transpose()).array().square().colwise().mean().transpose();
  // identical samples: report the value itself and an exact zero spread
  for (Eigen::Index j = 0; j < samples.cols(); ++j)
    if (samples.rows() > 0 && samples.col(j).minCoeff() == samples.col(j).maxCoeff()) {
      s.mean(j) = samples(0, j);
      s.variance(j) = Scalar(0);
    }
  return s;
}

/// n_mc generator samples at a single input row x_star.
template <typename Scalar>
MatrixX<Scalar> predict_samples(const CagmModel<Scalar>& model, const MatrixX<Scalar>& x_star,
                                std::size_t n_mc, Rng& rng) {
  if (x_star.rows() != 1) throw DimensionError("predict: x_star must be a single row");
  if (n_mc == 0) throw ConfigError("predict: n_mc must be positive");
  const auto n = static_cast<Eigen::Index>(n_mc);
  MatrixX<Scalar> x = x_star.replicate(n, 1);
  return generate(model, x, sample_latent<Scalar>(n, model.latent_dim, rng));
}

/// Monte Carlo mean and 1/N-normalized variance of the predictive distribution.
template <typename Scalar>
PredictiveStats<Scalar> predict_moments(const CagmModel<Scalar>& model,
                                        const MatrixX<Scalar>& x_star, std::size_t n_mc,
                                        Rng& rng) {
  if (n_mc < 2) throw ConfigError("predict_moments: n_mc must be >= 2");
  return sample_moments<Scalar>(predict_samples(model, x_star, n_mc, rng));
}

}  // namespace cagm
