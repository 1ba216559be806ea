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

// Command-line front end: gen-data, train, predict, evaluate, run, sweep,
// reproduce-table, reproduce-figure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cagm/errors.hpp"
#include "cagm/experiment/config.hpp"
#include "cagm/experiment/io.hpp"
#include "cagm/experiment/runner.hpp"
#include "cagm/experiment/sweep.hpp"
#include "cagm/format.hpp"

namespace fs = std::filesystem;
using namespace cagm;
using namespace cagm::experiment;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::size_t parallel = 1;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--preset", o.preset_name, "experiment preset (regression_i, ..., appendix_benchmark)");
  app->add_option("--set", o.sets, "override a key: section.key=value (repeatable)");
  app->add_option_function<std::uint64_t>(
      "--seed", [&o](const std::uint64_t& s) { o.seed = s; o.seed_given = true; }, "experiment seed");
  app->add_option("--out", o.out, "output directory (relative to $CAGM_OUTPUT_ROOT)");
}

ExperimentConfig build_config(const CommonOptions& o, ExperimentId fallback) {
  ExperimentConfig config = preset(o.preset_name.empty() ? fallback : parse_experiment_id(o.preset_name));
  if (!o.config_path.empty()) config = load_config(o.config_path, &config);
  std::vector<std::pair<std::string, std::string>> assignments;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    assignments.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  // an explicit experiment id switches presets before the other overrides apply
  for (const auto& [k, v] : assignments)
    if (k == "experiment.id") config = preset(parse_experiment_id(v));
  apply_overrides(config, assignments);
  if (o.seed_given) config.seed = o.seed;
  if (!o.out.empty()) config.output = o.out;
  config.validate();
  return config;
}

void print_report(const ExperimentReport& r) {
  std::cout << "output: " << r.output_dir << "\n";
  for (const auto& [name, v] : r.metrics) std::cout << "  " << name << " = " << format_real(v) << "\n";
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

Matrix read_inputs(const std::string& path, Eigen::Index cols) {
  std::ifstream in(path);
  if (!in) throw ConfigError("predict: cannot open '" + path + "'");
  std::vector<double> values;
  std::string line;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double v;
    Eigen::Index n = 0;
    while (ss >> v) {
      values.push_back(v);
      ++n;
    }
    if (n != cols)
      throw DimensionError("predict: row " + std::to_string(rows) + " has " + std::to_string(n) +
                           " values, model input width is " + std::to_string(cols));
    ++rows;
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, cols);
}

int run_predict(const std::string& checkpoint_path, const std::string& xs, const std::string& input_path,
                std::size_t n_mc, std::uint64_t seed, const std::string& out_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  TrainedModel m{ckpt.model, ckpt.normalization, {}};
  Matrix x;
  if (!input_path.empty()) {
    x = read_inputs(input_path, m.model.input_dim);
  } else {
    if (m.model.input_dim != 1) throw ConfigError("predict: --x needs a scalar-input model; use --input");
    const auto v = parse_list(xs);
    x = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (n_mc < 2) throw ConfigError("predict: --n-mc must be >= 2");
  std::vector<std::string> cols;
  for (Eigen::Index j = 0; j < x.cols(); ++j) cols.push_back("x" + std::to_string(j));
  for (Eigen::Index j = 0; j < m.model.output_dim; ++j) {
    cols.push_back("mean" + std::to_string(j));
    cols.push_back("sd" + std::to_string(j));
  }
  Rng rng(seed, Rng::fnv1a("predict"));
  const Provenance prov{Rng::fnv1a(checkpoint_to_json(ckpt).dump()), seed, std::string(kCodeVersion)};
  const std::string path = out_path.empty() ? "predictions.csv" : out_path;
  CsvWriter csv(path, prov, cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto st = sample_moments<double>(sample_at(m, x.row(i), n_mc, rng));
    std::vector<double> row;
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
    for (Eigen::Index j = 0; j < m.model.output_dim; ++j) {
      row.push_back(st.mean(j));
      row.push_back(std::sqrt(st.variance(j)));
    }
    csv.row(row);
  }
  csv.close();
  std::cout << "wrote " << path << "\n";
  return 0;
}

void copy_artifact(const std::string& dir, const std::string& from, const std::string& to) {
  fs::copy_file(fs::path(dir) / from, fs::path(dir) / to, fs::copy_options::overwrite_existing);
  std::cout << "wrote " << (fs::path(dir) / to).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Conditional adversarial generative models for stochastic surrogates"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, eval_o, run_o, sweep_o, table_o, figure_o;

  auto* gen = app.add_subcommand("gen-data", "generate and save an experiment's dataset");
  add_common(gen, gen_o);

  auto* tr = app.add_subcommand("train", "generate data and train the experiment's model(s)");
  add_common(tr, train_o);

  auto* ev = app.add_subcommand("evaluate", "evaluate saved checkpoints in the output directory");
  add_common(ev, eval_o);

  auto* rn = app.add_subcommand("run", "generate data, train and evaluate");
  add_common(rn, run_o);

  std::string ckpt_path, xs, input_path, predict_out;
  std::size_t n_mc = 2000;
  std::uint64_t predict_seed = 0;
  auto* pr = app.add_subcommand("predict", "predictive mean and standard deviation from a checkpoint");
  pr->add_option("--checkpoint", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  auto* x_opt = pr->add_option("--x", xs, "comma-separated scalar inputs");
  auto* in_opt = pr->add_option("--input", input_path, "whitespace-separated input rows")->check(CLI::ExistingFile);
  x_opt->excludes(in_opt);
  pr->add_option("--n-mc", n_mc, "Monte Carlo samples per input");
  pr->add_option("--seed", predict_seed, "sampling seed");
  pr->add_option("--out", predict_out, "output CSV path");

  std::string sweep_param = "lambda", sweep_values, sweep_seeds;
  auto* sw = app.add_subcommand("sweep", "sensitivity sweep over one parameter");
  add_common(sw, sweep_o);
  sw->add_option("--param", sweep_param, "lambda | architecture | kg_kd");
  sw->add_option("--values", sweep_values, "comma-separated cell values (default: the appendix grid)");
  sw->add_option("--seeds", sweep_seeds, "comma-separated seeds (default 0,1,2)");
  sw->add_option("--parallel", sweep_o.parallel, "worker threads");

  int table = 0;
  auto* rt = app.add_subcommand("reproduce-table", "appendix sensitivity table 2, 3 or 4");
  add_common(rt, table_o);
  rt->add_option("table", table, "table number")->required()->check(CLI::IsMember({2, 3, 4}));
  rt->add_option("--parallel", table_o.parallel, "worker threads");

  int figure = 0;
  auto* rf = app.add_subcommand("reproduce-figure", "CSV behind figure 3, 4 or 7");
  add_common(rf, figure_o);
  rf->add_option("figure", figure, "figure number")->required()->check(CLI::IsMember({3, 4, 7}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig c = build_config(gen_o, ExperimentId::regression_i);
      const std::string dir = resolve_output_dir(c);
      const ExperimentData d = generate_data(c);
      save_dataset(d.file, (fs::path(dir) / "dataset.txt").string());
      if (!d.file_single.generator.empty())
        save_dataset(d.file_single, (fs::path(dir) / "dataset_single.txt").string());
      std::cout << "wrote " << dir << "/dataset.txt (" << d.file.data.size() << " rows)\n";
    } else if (tr->parsed()) {
      const ExperimentConfig c = build_config(train_o, ExperimentId::regression_i);
      const std::string dir = resolve_output_dir(c);
      const TrainedExperiment t = train_experiment(c, dir);
      std::cout << "trained " << to_string(c.id) << " into " << dir << "\n";
    } else if (ev->parsed()) {
      const ExperimentConfig c = build_config(eval_o, ExperimentId::regression_i);
      print_report(evaluate_saved(c, resolve_output_dir(c)));
    } else if (rn->parsed()) {
      print_report(run(build_config(run_o, ExperimentId::regression_i)));
    } else if (pr->parsed()) {
      if (xs.empty() && input_path.empty()) throw ConfigError("predict: give --x or --input");
      return run_predict(ckpt_path, xs, input_path, n_mc, predict_seed, predict_out);
    } else if (sw->parsed()) {
      const ExperimentConfig base = build_config(sweep_o, ExperimentId::appendix_benchmark);
      SweepSpec spec = paper_sweep(parse_sweep_parameter(sweep_param));
      if (!sweep_values.empty()) {
        spec.values.clear();
        std::stringstream ss(sweep_values);
        for (std::string v; std::getline(ss, v, ',');) spec.values.push_back(v);
      }
      if (!sweep_seeds.empty()) {
        spec.seeds.clear();
        std::stringstream ss(sweep_seeds);
        for (std::string v; std::getline(ss, v, ',');) spec.seeds.push_back(std::stoull(v));
      }
      const SweepResult r = sweep(spec, base, sweep_o.parallel);
      const fs::path dir = resolve_output_dir(base);
      const std::string name = "sweep_" + to_string(spec.parameter);
      write_sweep_long((dir / (name + "_seeds.csv")).string(), provenance_of(base), r);
      write_sweep_table((dir / (name + ".csv")).string(), provenance_of(base), r);
      std::cout << "wrote " << (dir / (name + ".csv")).string() << "\n";
    } else if (rt->parsed()) {
      const ExperimentConfig base = build_config(table_o, ExperimentId::appendix_benchmark);
      const SweepResult r = sweep(paper_sweep(table_parameter(table)), base, table_o.parallel);
      const fs::path dir = resolve_output_dir(base);
      const std::string name = "table" + std::to_string(table);
      write_sweep_long((dir / (name + "_seeds.csv")).string(), provenance_of(base), r);
      write_sweep_table((dir / (name + ".csv")).string(), provenance_of(base), r);
      std::cout << "wrote " << (dir / (name + ".csv")).string() << "\n";
    } else if (rf->parsed()) {
      const ExperimentId id = figure == 7 ? ExperimentId::burgers : ExperimentId::multifidelity;
      const ExperimentReport r = run(build_config(figure_o, id));
      print_report(r);
      const std::string name = "figure" + std::to_string(figure) + ".csv";
      copy_artifact(r.output_dir, figure == 4 ? "kl_comparison.csv" : "predictions.csv", name);
    }
  } catch (const TrainingDivergenceError& e) {
    std::cerr << "error: training diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
