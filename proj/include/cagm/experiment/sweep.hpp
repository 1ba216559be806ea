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
#include <string>
#include <string_view>
#include <vector>

#include "cagm/experiment/config.hpp"
#include "cagm/experiment/io.hpp"

namespace cagm::experiment {

enum class SweepParameter { lambda, architecture, kg_kd };

std::string to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view name);

/// Cell values: lambda "1.5"; architecture "<layers>x<neurons>" with the
/// discriminator one hidden layer shallower than generator and encoder;
/// kg_kd "<k_g>:<k_d>".
struct SweepSpec {
  SweepParameter parameter = SweepParameter::lambda;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string metric = "avg_reverse_kl";
};

/// The appendix grids: lambda {1.0, 1.2, 1.5, 1.8, 2.0, 5.0}; layers
/// {2, 3, 4} x neurons {20, 50, 100}; k_g {1, 3, 5} x k_d {1, 3, 5}.
SweepSpec paper_sweep(SweepParameter p);

/// Applies one cell value to a config. Throws ConfigError on a malformed value.
void apply_cell(ExperimentConfig& config, SweepParameter p, const std::string& value);

struct SweepCell {
  std::string value;
  std::vector<double> per_seed;  // NaN where training diverged
  double median = 0.0;           // over finite entries; NaN if none
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepCell> cells;  // in spec.values order
};

/// Runs every (cell, seed) pair independently with up to `parallel` worker
/// threads. Each pair writes into its own directory under
/// <base output>/sweep-<parameter>/. Divergent runs become NaN entries;
/// any other failure is rethrown after all workers finish.
SweepResult sweep(const SweepSpec& spec, const ExperimentConfig& base, std::size_t parallel = 1);

/// Median of the finite entries (mean of the middle two for even counts).
double finite_median(std::vector<double> values);

/// value, seed_<s>..., median
void write_sweep_long(const std::string& path, const Provenance& prov, const SweepResult& r);

/// Table laid out like the appendix: a single row of lambda columns, or a
/// rows x columns grid for architecture (layers x neurons) and kg_kd
/// (k_g x k_d). Cells hold the median metric.
void write_sweep_table(const std::string& path, const Provenance& prov, const SweepResult& r);

int table_number(SweepParameter p);
SweepParameter table_parameter(int table);

}  // namespace cagm::experiment
