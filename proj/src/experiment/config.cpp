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

#include "cagm/experiment/config.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cagm/errors.hpp"
#include "cagm/format.hpp"
#include "cagm/random.hpp"

namespace cagm::experiment {

namespace {

struct Field {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_integer(const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_real(const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("expected a real number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true/false, got '" + text + "'");
}

std::vector<Eigen::Index> parse_widths(const std::string& text) {
  std::vector<Eigen::Index> out;
  const std::string s = trim(text);
  if (s.empty() || s == "none") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto w = parse_integer<std::size_t>(item);
    if (w == 0) throw ConfigError("layer widths must be positive, got '" + text + "'");
    out.push_back(static_cast<Eigen::Index>(w));
  }
  return out;
}

std::string format_widths(const std::vector<Eigen::Index>& w) {
  if (w.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
  return out;
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

#define CAGM_SIZE_FIELD(NAME, MEMBER)                                                     \
  Field{NAME, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },         \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_integer<std::size_t>(v); }}
#define CAGM_REAL_FIELD(NAME, MEMBER)                                                     \
  Field{NAME, [](const ExperimentConfig& c) { return format_real(c.MEMBER); },            \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_real(v); }}
#define CAGM_BOOL_FIELD(NAME, MEMBER)                                                     \
  Field{NAME, [](const ExperimentConfig& c) { return format_bool(c.MEMBER); },            \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_bool(v); }}
#define CAGM_WIDTHS_FIELD(NAME, MEMBER)                                                   \
  Field{NAME, [](const ExperimentConfig& c) { return format_widths(c.MEMBER); },          \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_widths(v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      Field{"experiment.id", [](const ExperimentConfig& c) { return to_string(c.id); },
            [](ExperimentConfig& c, const std::string& v) { c.id = parse_experiment_id(trim(v)); }},
      Field{"experiment.seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
            [](ExperimentConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); }},
      Field{"experiment.output", [](const ExperimentConfig& c) { return c.output; },
            [](ExperimentConfig& c, const std::string& v) { c.output = trim(v); }},
      CAGM_BOOL_FIELD("experiment.gp_baseline", gp_baseline),
      CAGM_REAL_FIELD("train.lambda", train.lambda),
      CAGM_REAL_FIELD("train.beta", train.beta),
      CAGM_SIZE_FIELD("train.k_g", train.k_g),
      CAGM_SIZE_FIELD("train.k_d", train.k_d),
      CAGM_REAL_FIELD("train.learning_rate", train.learning_rate),
      CAGM_SIZE_FIELD("train.batch_size", train.batch_size),
      CAGM_SIZE_FIELD("train.iterations", train.iterations),
      CAGM_SIZE_FIELD("train.n_mc", train.n_mc),
      Field{"model.latent_dim", [](const ExperimentConfig& c) { return std::to_string(c.model.latent_dim); },
            [](ExperimentConfig& c, const std::string& v) {
              c.model.latent_dim = static_cast<Eigen::Index>(parse_integer<std::size_t>(v));
            }},
      CAGM_WIDTHS_FIELD("model.generator_hidden", model.generator_hidden),
      CAGM_WIDTHS_FIELD("model.encoder_hidden", model.encoder_hidden),
      CAGM_WIDTHS_FIELD("model.discriminator_hidden", model.discriminator_hidden),
      CAGM_SIZE_FIELD("data.n", data.n),
      CAGM_SIZE_FIELD("data.n_heldout", data.n_heldout),
      CAGM_SIZE_FIELD("data.realizations", data.realizations),
      CAGM_SIZE_FIELD("data.paths", data.paths),
      CAGM_SIZE_FIELD("data.points_per_path", data.points_per_path),
      CAGM_SIZE_FIELD("data.burgers_realizations", data.burgers_realizations),
      CAGM_SIZE_FIELD("data.train_snapshots", data.train_snapshots),
      Field{"data.boundary", [](const ExperimentConfig& c) { return to_string(c.data.boundary); },
            [](ExperimentConfig& c, const std::string& v) { c.data.boundary = parse_burgers_boundary(trim(v)); }},
      CAGM_BOOL_FIELD("data.reserve_quarter_times", data.reserve_quarter_times),
      CAGM_SIZE_FIELD("metric.n_test", metric.n_test),
      CAGM_REAL_FIELD("metric.x_lo", metric.x_lo),
      CAGM_REAL_FIELD("metric.x_hi", metric.x_hi),
      CAGM_BOOL_FIELD("metric.random_locations", metric.random_locations),
      CAGM_SIZE_FIELD("metric.n_mc", metric.n_mc),
      CAGM_SIZE_FIELD("metric.n_paths", metric.n_paths),
      CAGM_SIZE_FIELD("metric.n_grid", metric.n_grid),
  };
  return table;
}

#undef CAGM_SIZE_FIELD
#undef CAGM_REAL_FIELD
#undef CAGM_BOOL_FIELD
#undef CAGM_WIDTHS_FIELD

const Field* find_field(std::string_view name) {
  for (const auto& f : fields())
    if (f.name == name) return &f;
  return nullptr;
}

constexpr std::pair<ExperimentId, std::string_view> kNames[] = {
    {ExperimentId::regression_i, "regression_i"},
    {ExperimentId::regression_ii, "regression_ii"},
    {ExperimentId::regression_iii, "regression_iii"},
    {ExperimentId::multifidelity, "multifidelity"},
    {ExperimentId::multifidelity_single, "multifidelity_single"},
    {ExperimentId::burgers, "burgers"},
    {ExperimentId::appendix_benchmark, "appendix_benchmark"},
};

}  // namespace

std::string to_string(ExperimentId id) {
  for (const auto& [k, name] : kNames)
    if (k == id) return std::string(name);
  return "unknown";
}

ExperimentId parse_experiment_id(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  std::string known;
  for (const auto& [k, n] : kNames) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown experiment '" + std::string(name) + "' (known: " + known + ")");
}

const std::vector<ExperimentId>& all_experiments() {
  static const std::vector<ExperimentId> ids = [] {
    std::vector<ExperimentId> v;
    for (const auto& [k, n] : kNames) v.push_back(k);
    return v;
  }();
  return ids;
}

void ExperimentConfig::validate() const {
  train.validate();
  if (model.latent_dim < 1) throw ConfigError("model.latent_dim must be positive");
  if (metric.n_test == 0) throw ConfigError("metric.n_test must be positive");
  if (metric.n_mc < 2) throw ConfigError("metric.n_mc must be >= 2");
  if (!(metric.x_hi > metric.x_lo)) throw ConfigError("metric.x_hi must exceed metric.x_lo");
  if (metric.n_grid == 0) throw ConfigError("metric.n_grid must be positive");
  if (metric.n_paths == 0 || metric.n_mc % metric.n_paths != 0)
    throw ConfigError("metric.n_paths must divide metric.n_mc");
  switch (id) {
    case ExperimentId::regression_i:
    case ExperimentId::regression_ii:
    case ExperimentId::regression_iii:
      if (data.n < 2) throw ConfigError("data.n must be >= 2");
      break;
    case ExperimentId::multifidelity:
    case ExperimentId::multifidelity_single:
      if (data.realizations == 0) throw ConfigError("data.realizations must be positive");
      break;
    case ExperimentId::burgers:
      if (data.burgers_realizations == 0 || data.train_snapshots == 0)
        throw ConfigError("data.burgers_realizations and data.train_snapshots must be positive");
      break;
    case ExperimentId::appendix_benchmark:
      if (data.paths == 0 || data.points_per_path == 0)
        throw ConfigError("data.paths and data.points_per_path must be positive");
      break;
  }
}

ExperimentConfig preset(ExperimentId id) {
  ExperimentConfig c;
  c.id = id;
  c.gp_baseline = false;
  switch (id) {
    case ExperimentId::regression_i:
    case ExperimentId::regression_ii:
    case ExperimentId::regression_iii:
      c.train.k_d = 2;
      c.train.k_g = 1;
      c.train.batch_size = 0;
      c.gp_baseline = true;
      c.metric.x_lo = -2.0;
      c.metric.x_hi = 2.0;
      break;
    case ExperimentId::multifidelity:
    case ExperimentId::multifidelity_single:
      c.train.k_d = 1;
      c.train.k_g = 5;
      c.train.batch_size = 0;
      break;
    case ExperimentId::burgers:
      c.train.k_d = 1;
      c.train.k_g = 1;
      c.train.beta = 0.5;
      c.train.batch_size = 128;
      c.model.latent_dim = 32;
      c.model.generator_hidden = {256, 256, 256};
      c.model.encoder_hidden = {256, 256, 256};
      c.model.discriminator_hidden = {256, 256};
      c.metric.n_mc = 1000;
      c.metric.n_paths = 1;
      break;
    case ExperimentId::appendix_benchmark:
      c.train.k_d = 3;
      c.train.k_g = 1;
      c.train.batch_size = 500;
      break;
  }
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.name);
  return out;
}

void apply_overrides(ExperimentConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& assignments) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : assignments) {
    const Field* f = find_field(trim(key));
    if (!f) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      f->set(config, value);
    } catch (const ConfigError& e) {
      problems.push_back(key + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

ExperimentConfig parse_config(std::istream& is, const ExperimentConfig* base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::vector<std::pair<std::string, std::string>> assignments;
  std::vector<std::string> problems;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      problems.push_back("key '" + section + "' outside a [section]");
      continue;
    }
    for (const auto& [key, value] : body) assignments.emplace_back(section + "." + key, value.data());
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  ExperimentConfig config = base ? *base : ExperimentConfig{};
  for (const auto& [key, value] : assignments)
    if (key == "experiment.id") config = preset(parse_experiment_id(trim(value)));
  apply_overrides(config, assignments);
  return config;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig* base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in, base);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.name.find('.');
    const std::string s = f.name.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += f.name.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.output.clear();
  return Rng::fnv1a(serialize_config(c));
}

std::string resolve_output_dir(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const std::string rel = config.output.empty()
                              ? to_string(config.id) + "/seed-" + std::to_string(config.seed)
                              : config.output;
  const fs::path p(rel);
  if (p.is_absolute()) return p.string();
  const char* root = std::getenv(std::string(kOutputRootEnv).c_str());
  return (fs::path(root && *root ? root : ".") / p).lexically_normal().string();
}

}  // namespace cagm::experiment
