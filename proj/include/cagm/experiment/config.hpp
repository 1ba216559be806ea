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
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cagm/cagm_model.hpp"
#include "cagm/synthetic.hpp"

namespace cagm::experiment {

inline constexpr std::string_view kCodeVersion = "0.1.0";
inline constexpr std::string_view kOutputRootEnv = "CAGM_OUTPUT_ROOT";

enum class ExperimentId {
  regression_i,
  regression_ii,
  regression_iii,
  multifidelity,
  multifidelity_single,
  burgers,
  appendix_benchmark,
};

std::string to_string(ExperimentId id);
ExperimentId parse_experiment_id(std::string_view name);
const std::vector<ExperimentId>& all_experiments();

struct DataConfig {
  std::size_t n = 200;                 // regression training points
  std::size_t n_heldout = 200;         // fresh noisy points for coverage
  std::size_t realizations = 50;       // multi-fidelity sensor realizations
  std::size_t paths = 100;             // benchmark GP paths
  std::size_t points_per_path = 100;
  std::size_t burgers_realizations = 100;
  std::size_t train_snapshots = 64;
  BurgersBoundary boundary = BurgersBoundary::dirichlet;
  bool reserve_quarter_times = true;
};

struct MetricConfig {
  std::size_t n_test = 100;  // evaluation locations on [x_lo, x_hi]
  double x_lo = 0.0;
  double x_hi = 1.0;
  bool random_locations = false;
  std::size_t n_mc = 2000;   // samples per location
  std::size_t n_paths = 200; // low-fidelity paths for multi-fidelity prediction
  std::size_t n_grid = 200;  // prediction CSV resolution (1-D experiments)
};

struct ExperimentConfig {
  ExperimentId id = ExperimentId::regression_i;
  std::uint64_t seed = 0;
  std::string output;        // run directory, relative to the output root
  bool gp_baseline = true;   // regression experiments only
  TrainConfig train;
  ModelArchitecture model;   // input/output widths are set by the runner
  DataConfig data;
  MetricConfig metric;

  void validate() const;
};

/// Per-experiment defaults. (k_d, k_g) follow each experiment's own text:
/// regression (2, 1) full batch, multi-fidelity (1, 5), Burgers (1, 1)
/// with beta = 0.5, appendix benchmark (3, 1) with batch 500. The global
/// "one-to-five" remark is not used as a default.
ExperimentConfig preset(ExperimentId id);

/// "section.key" names accepted by the config file and --set overrides.
std::vector<std::string> config_keys();

/// Applies key = value pairs; collects every unknown or malformed key and
/// throws a single ConfigError naming all of them.
void apply_overrides(ExperimentConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& assignments);

/// Parses an INI document ([section] headers, key = value lines). The
/// experiment.id key (if present) selects the preset the remaining keys
/// override.
ExperimentConfig parse_config(std::istream& is, const ExperimentConfig* base = nullptr);
ExperimentConfig load_config(const std::string& path, const ExperimentConfig* base = nullptr);

/// Canonical INI text: every key, fixed order, 17-digit reals.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a over the canonical text with the output directory blanked, so
/// relocating a run does not change its provenance.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Output root from the environment (default ".") joined with config.output,
/// or config.output itself when it is absolute.
std::string resolve_output_dir(const ExperimentConfig& config);

}  // namespace cagm::experiment
