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

#include "cagm/experiment/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include "cagm/errors.hpp"
#include "cagm/experiment/runner.hpp"
#include "cagm/format.hpp"

namespace cagm::experiment {

namespace {

std::pair<std::size_t, std::size_t> split_pair(const std::string& value, char sep) {
  const auto pos = value.find(sep);
  if (pos == std::string::npos || pos == 0 || pos + 1 == value.size())
    throw ConfigError("sweep: expected '<a>" + std::string(1, sep) + "<b>', got '" + value + "'");
  try {
    std::size_t used_a = 0, used_b = 0;
    const std::string a = value.substr(0, pos), b = value.substr(pos + 1);
    const auto va = std::stoul(a, &used_a);
    const auto vb = std::stoul(b, &used_b);
    if (used_a != a.size() || used_b != b.size() || va == 0 || vb == 0) throw std::invalid_argument(value);
    return {va, vb};
  } catch (const std::logic_error&) {
    throw ConfigError("sweep: expected two positive integers in '" + value + "'");
  }
}

std::string directory_name(const std::string& value) {
  std::string out = value;
  std::replace(out.begin(), out.end(), ':', '-');
  return out;
}

// (row key, column key) of a cell in the appendix layout
std::pair<std::string, std::string> layout_keys(SweepParameter p, const std::string& value) {
  if (p == SweepParameter::lambda) return {"Reverse-KL", value};
  const auto [a, b] = split_pair(value, p == SweepParameter::architecture ? 'x' : ':');
  return {std::to_string(a), std::to_string(b)};
}

}  // namespace

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::lambda: return "lambda";
    case SweepParameter::architecture: return "architecture";
    case SweepParameter::kg_kd: return "kg_kd";
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "lambda") return SweepParameter::lambda;
  if (name == "architecture") return SweepParameter::architecture;
  if (name == "kg_kd") return SweepParameter::kg_kd;
  throw ConfigError("unknown sweep parameter '" + std::string(name) + "' (lambda, architecture, kg_kd)");
}

SweepSpec paper_sweep(SweepParameter p) {
  SweepSpec s;
  s.parameter = p;
  switch (p) {
    case SweepParameter::lambda:
      s.values = {"1.0", "1.2", "1.5", "1.8", "2.0", "5.0"};
      break;
    case SweepParameter::architecture:
      for (const char* layers : {"2", "3", "4"})
        for (const char* neurons : {"20", "50", "100"}) s.values.push_back(std::string(layers) + "x" + neurons);
      break;
    case SweepParameter::kg_kd:
      for (const char* kg : {"1", "3", "5"})
        for (const char* kd : {"1", "3", "5"}) s.values.push_back(std::string(kg) + ":" + kd);
      break;
  }
  return s;
}

void apply_cell(ExperimentConfig& config, SweepParameter p, const std::string& value) {
  switch (p) {
    case SweepParameter::lambda:
      apply_overrides(config, {{"train.lambda", value}});
      break;
    case SweepParameter::architecture: {
      const auto [layers, neurons] = split_pair(value, 'x');
      if (layers < 2) throw ConfigError("sweep: architecture needs at least 2 generator layers");
      const auto n = static_cast<Eigen::Index>(neurons);
      config.model.generator_hidden.assign(layers, n);
      config.model.encoder_hidden.assign(layers, n);
      config.model.discriminator_hidden.assign(layers - 1, n);
      break;
    }
    case SweepParameter::kg_kd: {
      const auto [kg, kd] = split_pair(value, ':');
      config.train.k_g = kg;
      config.train.k_d = kd;
      break;
    }
  }
}

double finite_median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SweepResult sweep(const SweepSpec& spec, const ExperimentConfig& base, std::size_t parallel) {
  if (spec.values.empty()) throw ConfigError("sweep: empty value grid");
  if (spec.seeds.empty()) throw ConfigError("sweep: no seeds");
  const std::filesystem::path root =
      std::filesystem::absolute(resolve_output_dir(base)) / ("sweep-" + to_string(spec.parameter));

  struct Job {
    std::size_t cell, seed_index;
    ExperimentConfig config;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < spec.values.size(); ++c)
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
      ExperimentConfig cfg = base;
      apply_cell(cfg, spec.parameter, spec.values[c]);
      cfg.seed = spec.seeds[s];
      cfg.output = (root / directory_name(spec.values[c]) / ("seed-" + std::to_string(spec.seeds[s]))).string();
      cfg.validate();
      jobs.push_back({c, s, std::move(cfg)});
    }

  SweepResult result;
  result.spec = spec;
  for (const auto& v : spec.values)
    result.cells.push_back({v, std::vector<double>(spec.seeds.size(), std::numeric_limits<double>::quiet_NaN()), 0.0});

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      try {
        const ExperimentReport report = run(job.config);
        result.cells[job.cell].per_seed[job.seed_index] = report.metric(spec.metric);
      } catch (const TrainingDivergenceError&) {
        // recorded as NaN
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(parallel, 1, jobs.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  for (auto& cell : result.cells) cell.median = finite_median(cell.per_seed);
  return result;
}

void write_sweep_long(const std::string& path, const Provenance& prov, const SweepResult& r) {
  std::vector<std::string> cols{to_string(r.spec.parameter)};
  for (const auto s : r.spec.seeds) cols.push_back("seed_" + std::to_string(s));
  cols.emplace_back("median");
  CsvWriter csv(path, prov, cols);
  for (const auto& cell : r.cells) {
    std::vector<std::string> row{cell.value};
    for (const double v : cell.per_seed) row.push_back(format_real(v));
    row.push_back(format_real(cell.median));
    csv.row(row);
  }
  csv.close();
}

void write_sweep_table(const std::string& path, const Provenance& prov, const SweepResult& r) {
  std::vector<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, double> value;
  auto remember = [](std::vector<std::string>& v, const std::string& k) {
    if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
  };
  for (const auto& cell : r.cells) {
    const auto key = layout_keys(r.spec.parameter, cell.value);
    remember(rows, key.first);
    remember(cols, key.second);
    value[key] = cell.median;
  }
  std::string corner;
  switch (r.spec.parameter) {
    case SweepParameter::lambda: corner = "lambda"; break;
    case SweepParameter::architecture: corner = "N_g\\N_n"; break;
    case SweepParameter::kg_kd: corner = "K_g\\K_d"; break;
  }
  std::vector<std::string> header{corner};
  header.insert(header.end(), cols.begin(), cols.end());
  CsvWriter csv(path, prov, header);
  for (const auto& row_key : rows) {
    std::vector<std::string> line{row_key};
    for (const auto& col_key : cols) {
      const auto it = value.find({row_key, col_key});
      line.push_back(it == value.end() ? "" : format_real(it->second));
    }
    csv.row(line);
  }
  csv.close();
}

int table_number(SweepParameter p) {
  switch (p) {
    case SweepParameter::lambda: return 2;
    case SweepParameter::architecture: return 3;
    case SweepParameter::kg_kd: return 4;
  }
  return 0;
}

SweepParameter table_parameter(int table) {
  switch (table) {
    case 2: return SweepParameter::lambda;
    case 3: return SweepParameter::architecture;
    case 4: return SweepParameter::kg_kd;
  }
  throw ConfigError("reproduce-table: expected 2, 3 or 4, got " + std::to_string(table));
}

}  // namespace cagm::experiment
