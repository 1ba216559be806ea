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

#include <vector>

#include <Eigen/Core>

#include "cagm/errors.hpp"
#include "cagm/tape.hpp"

namespace cagm {

/// Paired observations (x_i, y_i), one row per pair.
template <typename Scalar>
struct PairedDataset {
  MatrixX<Scalar> inputs;
  MatrixX<Scalar> outputs;
  std::vector<double> labels;  // optional per-row tag, e.g. physical time

  Eigen::Index size() const { return inputs.rows(); }

  void validate() const {
    if (inputs.rows() != outputs.rows())
      throw DimensionError("dataset: input and output row counts differ");
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != inputs.rows())
      throw DimensionError("dataset: label count differs from row count");
  }
};

template <typename Other, typename Scalar>
PairedDataset<Other> cast_dataset(const PairedDataset<Scalar>& d) {
  return {d.inputs.template cast<Other>(), d.outputs.template cast<Other>(), d.labels};
}

}  // namespace cagm
