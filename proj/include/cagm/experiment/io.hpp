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

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "cagm/cagm_model.hpp"
#include "cagm/dataset.hpp"
#include "cagm/linalg.hpp"

namespace cagm::experiment {

/// Affine maps between raw and network coordinates: inputs are z-scored per
/// column, outputs share one global mean and scale.
struct Normalization {
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;

  static Normalization identity(Eigen::Index input_dim);
  static Normalization fit(const PairedDataset<double>& data);

  Matrix to_network_x(const Matrix& x) const;
  Matrix to_network_y(const Matrix& y) const;
  Matrix from_network_y(const Matrix& y) const;
  PairedDataset<double> apply(const PairedDataset<double>& data) const;
};

struct Checkpoint {
  std::string experiment;
  CagmModel<double> model;
  TrainConfig train;
  Normalization normalization;
  double final_discriminator_loss = 0.0;  // NaN when no iteration ran
  double final_generator_loss = 0.0;
};

inline constexpr int kCheckpointSchemaVersion = 1;

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Throws FormatError on a missing field, shape mismatch or schema mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Dataset file: a magic line, one JSON header line, then one text row per
/// sample holding the inputs, the outputs and (optionally) the label.
struct DatasetFile {
  std::string generator;
  std::uint64_t seed = 0;
  nlohmann::json spec = nlohmann::json::object();
  PairedDataset<double> data;
};

inline constexpr std::string_view kDatasetMagic = "# cagm-dataset v1";

void save_dataset(const DatasetFile& file, const std::string& path);
DatasetFile load_dataset(const std::string& path);

struct Provenance {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version;

  std::string line() const;  // "# config_hash=..., seed=..., version=..."
};

/// CSV with a provenance comment line and a header row; reals use 17
/// significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const Provenance& provenance,
            const std::vector<std::string>& columns);

  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace cagm::experiment
