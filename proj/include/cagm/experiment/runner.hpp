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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cagm/burgers.hpp"
#include "cagm/cagm_model.hpp"
#include "cagm/experiment/config.hpp"
#include "cagm/experiment/io.hpp"
#include "cagm/metrics.hpp"
#include "cagm/synthetic.hpp"

namespace cagm::experiment {

/// A model together with the coordinate maps it was trained in.
struct TrainedModel {
  CagmModel<double> model;
  Normalization normalization;
  LossHistory history;
};

/// One generator sample per row of raw inputs x (n x input_dim), returned
/// in raw output units.
Matrix sample_outputs(const TrainedModel& m, const Matrix& x, Rng& rng);

/// n_mc samples at a single raw input row.
Matrix sample_at(const TrainedModel& m, const Eigen::RowVectorXd& x, std::size_t n_mc, Rng& rng);

/// Marginal sampler for models with scalar input and scalar output.
MarginalSampler scalar_sampler(const TrainedModel& m);

struct FieldPrediction {
  Vector grid;
  Matrix samples;  // (n_paths * n_mc) x |grid|
  Vector mean;
  Vector variance;  // 1/N normalized
};

/// Draws n_paths joint low-fidelity paths over the grid and pushes each
/// (x, y_L) pair through the generator n_mc times with fresh z; samples are
/// pooled per location.
FieldPrediction multifidelity_predict(const TrainedModel& m, const MultiFidelitySpec& spec,
                                      const Vector& grid, std::size_t n_paths, std::size_t n_mc,
                                      Rng& rng);

/// Raw datasets for one experiment, regenerated deterministically from the
/// config seed.
struct ExperimentData {
  PairedDataset<double> train;          // primary model's training pairs
  PairedDataset<double> train_single;   // multi-fidelity runs: (x, y_H) pairs
  PairedDataset<double> heldout;        // regression: fresh noisy points
  std::optional<BurgersDataset> burgers;
  DatasetFile file;                     // what gen-data writes
  DatasetFile file_single;
};

ExperimentData generate_data(const ExperimentConfig& config);

struct ExperimentReport {
  std::string output_dir;
  std::vector<std::pair<std::string, double>> metrics;
  LossHistory history;         // primary model
  LossHistory history_single;  // multi-fidelity runs

  /// NaN when absent.
  double metric(std::string_view name) const;
};

/// Trains the experiment's model(s) on freshly generated data. Writes
/// dataset, checkpoint(s) and loss histories into the output directory.
/// On divergence the partial loss history is written before rethrowing.
struct TrainedExperiment {
  ExperimentData data;
  std::optional<TrainedModel> primary;  // absent for multifidelity_single
  std::optional<TrainedModel> single;   // multi-fidelity runs only
};

TrainedExperiment train_experiment(const ExperimentConfig& config, const std::string& out_dir);

/// Computes metrics and prediction tables for trained models and writes
/// predictions.csv, metrics.csv and the marginal KL reports.
ExperimentReport evaluate_experiment(const ExperimentConfig& config, const TrainedExperiment& trained,
                                     const std::string& out_dir);

/// Reloads checkpoints from out_dir (regenerating the data from the seed)
/// and evaluates them.
ExperimentReport evaluate_saved(const ExperimentConfig& config, const std::string& out_dir);

/// generate data -> train -> evaluate, with every artifact written under
/// resolve_output_dir(config).
ExperimentReport run(const ExperimentConfig& config);

Provenance provenance_of(const ExperimentConfig& config);

/// Mean of -L_D over the last `window` recorded iterations (all of them if
/// fewer); NaN for an empty history.
double discriminator_tail_mean(const LossHistory& h, std::size_t window);

/// Keeps large training temporaries on the heap instead of fresh mappings,
/// which otherwise page-fault on every iteration. No-op outside glibc.
void tune_allocator();

}  // namespace cagm::experiment
