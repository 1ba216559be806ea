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

#include "cagm/experiment/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cagm/errors.hpp"
#include "cagm/format.hpp"
#include "cagm/gp_regressor.hpp"

namespace cagm::experiment {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kKinkX = 0.03;

bool is_regression(ExperimentId id) {
  return id == ExperimentId::regression_i || id == ExperimentId::regression_ii ||
         id == ExperimentId::regression_iii;
}

bool is_multifidelity(ExperimentId id) {
  return id == ExperimentId::multifidelity || id == ExperimentId::multifidelity_single;
}

NoiseCase noise_of(ExperimentId id) {
  switch (id) {
    case ExperimentId::regression_ii: return NoiseCase::heteroscedastic;
    case ExperimentId::regression_iii: return NoiseCase::non_additive;
    default: return NoiseCase::homoscedastic;
  }
}

BurgersSpec burgers_spec(const ExperimentConfig& c) {
  BurgersSpec s;
  s.boundary = c.data.boundary;
  return s;
}

BenchmarkSpec benchmark_spec(const ExperimentConfig& c) {
  BenchmarkSpec s;
  s.paths = c.data.paths;
  s.points_per_path = c.data.points_per_path;
  return s;
}

MultiFidelitySpec multifidelity_spec(const ExperimentConfig& c) {
  MultiFidelitySpec s;
  s.realizations = c.data.realizations;
  return s;
}

ModelArchitecture architecture(const ExperimentConfig& c, const PairedDataset<double>& d) {
  ModelArchitecture a = c.model;
  a.input_dim = d.inputs.cols();
  a.output_dim = d.outputs.cols();
  return a;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_history(const std::string& path, const Provenance& prov, const LossHistory& h) {
  CsvWriter csv(path, prov, {"iteration", "discriminator_objective", "generator_loss"});
  for (std::size_t i = 0; i < h.size(); ++i)
    csv.row({static_cast<double>(i + 1), h.discriminator[i], h.generator[i]});
  csv.close();
}

TrainedModel train_one(const ExperimentConfig& config, const PairedDataset<double>& raw,
                       std::string_view stream, const std::string& history_path,
                       const std::string& checkpoint_path) {
  const Rng root(config.seed);
  TrainedModel m;
  m.normalization = Normalization::fit(raw);
  Rng init = root.split(std::string("model-init/") + std::string(stream));
  m.model = CagmModel<double>::create(architecture(config, raw), init);
  TrainConfig tc = config.train;
  tc.seed = root.split(std::string("train/") + std::string(stream)).next_u64();
  const Provenance prov = provenance_of(config);
  try {
    m.history = train(m.model, m.normalization.apply(raw), tc);
  } catch (const TrainingDivergenceError& e) {
    write_history(history_path, prov, e.partial_history());
    throw;
  }
  write_history(history_path, prov, m.history);
  Checkpoint ckpt;
  ckpt.experiment = to_string(config.id);
  ckpt.model = m.model;
  ckpt.train = tc;
  ckpt.normalization = m.normalization;
  ckpt.final_discriminator_loss = m.history.empty() ? kNaN : m.history.discriminator.back();
  ckpt.final_generator_loss = m.history.empty() ? kNaN : m.history.generator.back();
  save_checkpoint(ckpt, checkpoint_path);
  return m;
}

LossHistory read_history(const std::string& path) {
  LossHistory h;
  std::ifstream in(path);
  if (!in) return h;
  std::string line;
  std::getline(in, line);  // provenance
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw FormatError("loss history '" + path + "': malformed row");
    h.discriminator.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    h.generator.push_back(std::stod(line.substr(b + 1)));
  }
  return h;
}

TrainedModel from_checkpoint(const std::string& checkpoint_path, const std::string& history_path) {
  Checkpoint c = load_checkpoint(checkpoint_path);
  TrainedModel m;
  m.model = std::move(c.model);
  m.normalization = std::move(c.normalization);
  m.history = read_history(history_path);
  return m;
}

Vector test_locations(const ExperimentConfig& c, Rng& rng) {
  return c.metric.random_locations ? random_locations(c.metric.x_lo, c.metric.x_hi, c.metric.n_test, rng)
                                   : uniform_grid(c.metric.x_lo, c.metric.x_hi, c.metric.n_test);
}

PredictiveStats<double> moments_of(const Matrix& samples) { return sample_moments<double>(samples); }

double pearson(const Vector& a, const Vector& b) {
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  return den > 0.0 ? da.dot(db) / den : kNaN;
}

std::string time_tag(double t) { return format_real(t); }

class MetricSink {
 public:
  void add(std::string name, double v) { values_.emplace_back(std::move(name), v); }
  void add_history(const std::string& prefix, const LossHistory& h) {
    add(prefix + "final_discriminator_objective", h.empty() ? kNaN : h.discriminator.back());
    add(prefix + "final_generator_loss", h.empty() ? kNaN : h.generator.back());
    add(prefix + "neg_discriminator_tail_mean", discriminator_tail_mean(h, 2000));
    add(prefix + "saturated_logits", static_cast<double>(h.saturated_logits));
  }
  void add_report(const std::string& prefix, const MarginalReport& r) {
    add(prefix + "avg_reverse_kl", r.avg_reverse);
    add(prefix + "avg_forward_kl", r.avg_forward);
    add(prefix + "kl_excluded", static_cast<double>(r.excluded()));
  }
  std::vector<std::pair<std::string, double>> take() { return std::move(values_); }

 private:
  std::vector<std::pair<std::string, double>> values_;
};

void write_metrics(const std::string& path, const Provenance& prov,
                   const std::vector<std::pair<std::string, double>>& metrics) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [n, v] : metrics) {
    names.push_back(n);
    values.push_back(v);
  }
  CsvWriter csv(path, prov, names);
  csv.row(values);
  csv.close();
}

void write_marginal_report(const std::string& path, const Provenance& prov, const MarginalReport& r) {
  CsvWriter csv(path, prov, {"x", "kl_forward", "kl_reverse"});
  for (Eigen::Index i = 0; i < r.xs.size(); ++i)
    csv.row({r.xs(i), r.kl_forward(i), r.kl_reverse(i)});
  csv.row({"mean", format_real(r.avg_forward), format_real(r.avg_reverse)});
  csv.close();
}

// ---- per-experiment evaluation -------------------------------------------

void evaluate_regression(const ExperimentConfig& c, const TrainedExperiment& t, const std::string& dir,
                         MetricSink& sink) {
  const TrainedModel& m = *t.primary;
  const NoiseCase noise = noise_of(c.id);
  const Provenance prov = provenance_of(c);
  const Rng root(c.seed);

  std::optional<GpRegressor> gp;
  if (c.gp_baseline) {
    const Vector x = t.data.train.inputs.col(0);
    const Vector y = t.data.train.outputs.col(0);
    const double vy = (y.array() - y.mean()).square().mean();
    GpFitOptions opts;
    opts.seed = root.split("gp-fit").next_u64();
    gp = gp_fit(x, y, GpSpec{vy, 1.0}, 0.1 * vy, opts);
    sink.add("gp_sigma_f2", gp->kernel.sigma_f2);
    sink.add("gp_l2", gp->kernel.l2);
    sink.add("gp_noise_variance", gp->noise_variance);
  }

  // prediction table
  {
    Rng rng = root.split("eval/grid");
    const Vector grid = uniform_grid(c.metric.x_lo, c.metric.x_hi, c.metric.n_grid);
    std::vector<std::string> cols{"x", "mean", "lower", "upper", "sd", "exact_mean", "exact_sd"};
    std::optional<GpPrediction> gpp;
    if (gp) {
      gpp = gp_predict(*gp, grid);
      for (const char* s : {"gp_mean", "gp_lower", "gp_upper", "gp_sd"}) cols.emplace_back(s);
    }
    CsvWriter csv(join(dir, "predictions.csv"), prov, cols);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const auto st = moments_of(sample_at(m, Eigen::RowVectorXd::Constant(1, grid(i)), c.metric.n_mc, rng));
      const double sd = std::sqrt(st.variance(0));
      const Moments ex = regression_moments(noise, grid(i));
      std::vector<double> row{grid(i), st.mean(0), st.mean(0) - 2 * sd, st.mean(0) + 2 * sd, sd,
                              ex.mean, std::sqrt(ex.variance)};
      if (gpp) {
        const double gsd = std::sqrt(gpp->predictive_variance(i));
        row.insert(row.end(), {gpp->mean(i), gpp->mean(i) - 2 * gsd, gpp->mean(i) + 2 * gsd, gsd});
      }
      csv.row(row);
    }
    csv.close();
  }

  // two-sigma coverage of fresh noisy points
  {
    Rng rng = root.split("eval/coverage");
    const PairedDataset<double>& h = t.data.heldout;
    std::size_t hit = 0, gp_hit = 0;
    std::optional<GpPrediction> gpp;
    if (gp) gpp = gp_predict(*gp, h.inputs.col(0));
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      const auto st = moments_of(sample_at(m, h.inputs.row(i), c.metric.n_mc, rng));
      if (std::abs(h.outputs(i, 0) - st.mean(0)) <= 2.0 * std::sqrt(st.variance(0))) ++hit;
      if (gpp && std::abs(h.outputs(i, 0) - gpp->mean(i)) <= 2.0 * std::sqrt(gpp->predictive_variance(i)))
        ++gp_hit;
    }
    const double n = static_cast<double>(h.size());
    sink.add("coverage_2sigma", static_cast<double>(hit) / n);
    if (gp) sink.add("gp_coverage_2sigma", static_cast<double>(gp_hit) / n);
  }

  // spread at the kink
  {
    Rng rng = root.split("eval/kink");
    const auto st = moments_of(sample_at(m, Eigen::RowVectorXd::Constant(1, kKinkX), c.metric.n_mc, rng));
    sink.add("sigma_at_0.03", std::sqrt(st.variance(0)));
    sink.add("true_sd_at_0.03", std::sqrt(regression_moments(noise, kKinkX).variance));
    sink.add("envelope_at_0.03", heteroscedastic_envelope(kKinkX));
    if (gp) sink.add("gp_sigma_at_0.03", std::sqrt(gp_predict(*gp, Vector::Constant(1, kKinkX)).predictive_variance(0)));
  }

  // marginal KL against the exact (moment-matched for non-additive noise) Gaussian
  {
    Rng loc = root.split("eval/locations");
    Rng rng = root.split("eval/kl");
    const Vector xs = test_locations(c, loc);
    const MarginalReport r = avg_marginal_kl(
        scalar_sampler(m),
        [noise](double x) {
          const Moments e = regression_moments(noise, x);
          return Gaussian1D{e.mean, e.variance};
        },
        xs, c.metric.n_mc, rng);
    write_marginal_report(join(dir, "marginal_kl.csv"), prov, r);
    sink.add_report("", r);
  }
}

void evaluate_multifidelity(const ExperimentConfig& c, const TrainedExperiment& t, const std::string& dir,
                            MetricSink& sink) {
  const MultiFidelitySpec spec = multifidelity_spec(c);
  const Provenance prov = provenance_of(c);
  const Rng root(c.seed);
  const double hf_var = high_fidelity_variance(spec);
  const auto exact = [hf_var](double x) { return Gaussian1D{mu_high(x), hf_var}; };
  const std::size_t per_path = c.metric.n_mc / c.metric.n_paths;

  Rng loc = root.split("eval/locations");
  const Vector xs = test_locations(c, loc);
  MarginalReport mf_report, sf_report;
  if (t.primary) {
    Rng rng = root.split("eval/kl");
    const FieldPrediction p = multifidelity_predict(*t.primary, spec, xs, c.metric.n_paths, per_path, rng);
    mf_report = marginal_kl_from_samples(xs, p.samples, exact);
    write_marginal_report(join(dir, "marginal_kl.csv"), prov, mf_report);
    sink.add_report("mf_", mf_report);
  }
  {
    Rng rng = root.split("eval/kl-single");
    sf_report = avg_marginal_kl(scalar_sampler(*t.single), exact, xs, c.metric.n_mc, rng);
    write_marginal_report(join(dir, "marginal_kl_single.csv"), prov, sf_report);
    sink.add_report("sf_", sf_report);
  }
  if (t.primary) {
    // per-location comparison table (both directions, both models)
    CsvWriter csv(join(dir, "kl_comparison.csv"), prov,
                  {"x", "mf_kl_forward", "mf_kl_reverse", "sf_kl_forward", "sf_kl_reverse"});
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      auto pick = [&](const MarginalReport& r, bool fwd) {
        for (Eigen::Index k = 0; k < r.xs.size(); ++k)
          if (r.xs(k) == xs(i)) return fwd ? r.kl_forward(k) : r.kl_reverse(k);
        return kNaN;
      };
      csv.row({xs(i), pick(mf_report, true), pick(mf_report, false), pick(sf_report, true),
               pick(sf_report, false)});
    }
    csv.close();
  }

  // prediction table
  const Vector grid = uniform_grid(c.metric.x_lo, c.metric.x_hi, c.metric.n_grid);
  std::vector<std::string> cols{"x", "exact_mean", "exact_sd"};
  std::optional<FieldPrediction> mf;
  if (t.primary) {
    Rng rng = root.split("eval/grid");
    mf = multifidelity_predict(*t.primary, spec, grid, c.metric.n_paths, per_path, rng);
    for (const char* s : {"mf_mean", "mf_lower", "mf_upper", "mf_sd"}) cols.emplace_back(s);
  }
  for (const char* s : {"sf_mean", "sf_lower", "sf_upper", "sf_sd"}) cols.emplace_back(s);
  Rng rng = root.split("eval/grid-single");
  CsvWriter csv(join(dir, "predictions.csv"), prov, cols);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid(i), mu_high(grid(i)), std::sqrt(hf_var)};
    if (mf) {
      const double sd = std::sqrt(mf->variance(i));
      row.insert(row.end(), {mf->mean(i), mf->mean(i) - 2 * sd, mf->mean(i) + 2 * sd, sd});
    }
    const auto st = moments_of(sample_at(*t.single, Eigen::RowVectorXd::Constant(1, grid(i)), c.metric.n_mc, rng));
    const double sd = std::sqrt(st.variance(0));
    row.insert(row.end(), {st.mean(0), st.mean(0) - 2 * sd, st.mean(0) + 2 * sd, sd});
    csv.row(row);
  }
  csv.close();
}

void evaluate_appendix(const ExperimentConfig& c, const TrainedExperiment& t, const std::string& dir,
                       MetricSink& sink) {
  const TrainedModel& m = *t.primary;
  const BenchmarkSpec spec = benchmark_spec(c);
  const Provenance prov = provenance_of(c);
  const Rng root(c.seed);
  const double var = spec.kernel.sigma_f2;
  const auto exact = [var](double x) { return Gaussian1D{mu_high(x), var}; };

  Rng loc = root.split("eval/locations");
  Rng rng = root.split("eval/kl");
  const Vector xs = test_locations(c, loc);
  const MarginalReport r = avg_marginal_kl(scalar_sampler(m), exact, xs, c.metric.n_mc, rng);
  write_marginal_report(join(dir, "marginal_kl.csv"), prov, r);
  sink.add_report("", r);

  Rng grng = root.split("eval/grid");
  const Vector grid = uniform_grid(c.metric.x_lo, c.metric.x_hi, c.metric.n_grid);
  CsvWriter csv(join(dir, "predictions.csv"), prov,
                {"x", "mean", "lower", "upper", "sd", "exact_mean", "exact_sd"});
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const auto st = moments_of(sample_at(m, Eigen::RowVectorXd::Constant(1, grid(i)), c.metric.n_mc, grng));
    const double sd = std::sqrt(st.variance(0));
    csv.row({grid(i), st.mean(0), st.mean(0) - 2 * sd, st.mean(0) + 2 * sd, sd, mu_high(grid(i)),
             std::sqrt(var)});
  }
  csv.close();
}

void evaluate_burgers(const ExperimentConfig& c, const TrainedExperiment& t, const std::string& dir,
                      MetricSink& sink) {
  const TrainedModel& m = *t.primary;
  const BurgersDataset& ds = *t.data.burgers;
  const BurgersSpec spec = burgers_spec(c);
  const Provenance prov = provenance_of(c);
  const Rng root(c.seed);
  const Vector x = spec.grid();
  sink.add("max_boundary_abs", ds.max_boundary_abs);

  CsvWriter csv(join(dir, "predictions.csv"), prov,
                {"t", "x", "ref_mean", "ref_sd", "pred_mean", "pred_sd"});
  double worst_l2 = 0.0, worst_r = std::numeric_limits<double>::infinity();
  for (const std::size_t j : quarter_time_snapshots(spec)) {
    const double tj = ds.times(static_cast<Eigen::Index>(j));
    Matrix ref(static_cast<Eigen::Index>(ds.solutions.size()), x.size());
    for (std::size_t r = 0; r < ds.solutions.size(); ++r)
      ref.row(static_cast<Eigen::Index>(r)) = ds.solutions[r].row(static_cast<Eigen::Index>(j));
    const auto rs = moments_of(ref);
    Rng rng = root.split("eval/t" + time_tag(tj));
    const auto ps = moments_of(sample_at(m, Eigen::RowVectorXd::Constant(1, ds.normalize_time(tj)),
                                         c.metric.n_mc, rng));
    const Vector rsd = rs.variance.array().sqrt();
    const Vector psd = ps.variance.array().sqrt();
    const double l2 = (ps.mean - rs.mean).norm() / rs.mean.norm();
    const double r = pearson(psd, rsd);
    const bool trained_on = std::binary_search(ds.train_snapshots.begin(), ds.train_snapshots.end(), j);
    sink.add("rel_l2_mean_t" + time_tag(tj), l2);
    sink.add("sd_pearson_t" + time_tag(tj), r);
    sink.add("in_training_t" + time_tag(tj), trained_on ? 1.0 : 0.0);
    worst_l2 = std::max(worst_l2, std::isnan(l2) ? std::numeric_limits<double>::infinity() : l2);
    worst_r = std::min(worst_r, std::isnan(r) ? -std::numeric_limits<double>::infinity() : r);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      csv.row({tj, x(i), rs.mean(i), rsd(i), ps.mean(i), psd(i)});
  }
  csv.close();
  sink.add("max_rel_l2_mean", worst_l2);
  sink.add("min_sd_pearson", worst_r);
}

}  // namespace

// ---- sampling ----------------------------------------------------------------

Matrix sample_outputs(const TrainedModel& m, const Matrix& x, Rng& rng) {
  const Matrix xn = m.normalization.to_network_x(x);
  const Matrix z = sample_latent<double>(x.rows(), m.model.latent_dim, rng);
  return m.normalization.from_network_y(generate(m.model, xn, z));
}

Matrix sample_at(const TrainedModel& m, const Eigen::RowVectorXd& x, std::size_t n_mc, Rng& rng) {
  if (n_mc == 0) throw ConfigError("sample_at: n_mc must be positive");
  return sample_outputs(m, x.replicate(static_cast<Eigen::Index>(n_mc), 1), rng);
}

MarginalSampler scalar_sampler(const TrainedModel& m) {
  if (m.model.input_dim != 1 || m.model.output_dim != 1)
    throw DimensionError("scalar_sampler: model must map a scalar input to a scalar output");
  return [&m](double x, std::size_t n, Rng& rng) -> Vector {
    return sample_at(m, Eigen::RowVectorXd::Constant(1, x), n, rng).col(0);
  };
}

FieldPrediction multifidelity_predict(const TrainedModel& m, const MultiFidelitySpec& spec,
                                      const Vector& grid, std::size_t n_paths, std::size_t n_mc,
                                      Rng& rng) {
  if (m.model.input_dim != 2 || m.model.output_dim != 1)
    throw DimensionError("multifidelity_predict: model must map (x, y_L) to a scalar");
  if (n_paths == 0 || n_mc == 0) throw ConfigError("multifidelity_predict: n_paths and n_mc must be positive");
  const Matrix paths = sample_low_fidelity_paths(spec, grid, n_paths, rng);
  const auto g = grid.size();
  const auto per = static_cast<Eigen::Index>(n_mc);
  FieldPrediction out;
  out.grid = grid;
  out.samples.resize(static_cast<Eigen::Index>(n_paths) * per, g);
  Matrix x(g * per, 2);
  for (Eigen::Index p = 0; p < static_cast<Eigen::Index>(n_paths); ++p) {
    for (Eigen::Index i = 0; i < g; ++i)
      for (Eigen::Index k = 0; k < per; ++k) {
        x(i * per + k, 0) = grid(i);
        x(i * per + k, 1) = paths(p, i);
      }
    const Matrix y = sample_outputs(m, x, rng);
    for (Eigen::Index i = 0; i < g; ++i)
      out.samples.block(p * per, i, per, 1) = y.block(i * per, 0, per, 1);
  }
  const auto st = moments_of(out.samples);
  out.mean = st.mean;
  out.variance = st.variance;
  return out;
}

// ---- pipeline ----------------------------------------------------------------

ExperimentData generate_data(const ExperimentConfig& config) {
  config.validate();
  const Rng root(config.seed);
  Rng data_rng = root.split("data");
  ExperimentData d;
  d.file.seed = config.seed;
  if (is_regression(config.id)) {
    const NoiseCase noise = noise_of(config.id);
    const RegressionSpec spec;
    d.train = noisy_regression_dataset(noise, config.data.n, data_rng, spec);
    Rng heldout_rng = root.split("heldout");
    d.heldout = noisy_regression_dataset(noise, config.data.n_heldout, heldout_rng, spec);
    d.file.generator = "regression";
    d.file.spec = {{"noise", to_string(noise)},
                   {"n", config.data.n},
                   {"x_lo", spec.x_lo},
                   {"x_hi", spec.x_hi},
                   {"homoscedastic_fraction", spec.homoscedastic_fraction},
                   {"epsilon_sd", spec.epsilon_sd}};
    d.file.data = d.train;
  } else if (is_multifidelity(config.id)) {
    const MultiFidelitySpec spec = multifidelity_spec(config);
    const MultiFidelityData mfd = multifidelity_dataset(spec, data_rng);
    d.train = multifidelity_pairs(mfd);
    d.train_single = single_fidelity_pairs(mfd);
    const json js{{"low", {{"sigma_f2", spec.low.sigma_f2}, {"l2", spec.low.l2}}},
                  {"high", {{"sigma_f2", spec.high.sigma_f2}, {"l2", spec.high.l2}}},
                  {"rho", spec.rho},
                  {"sensors", spec.sensors},
                  {"realizations", spec.realizations}};
    d.file.generator = "multifidelity";
    d.file.spec = js;
    d.file.data = d.train;
    d.file_single = DatasetFile{"multifidelity_single", config.seed, js, d.train_single};
  } else if (config.id == ExperimentId::burgers) {
    const BurgersSpec spec = burgers_spec(config);
    Rng split_rng = root.split("snapshot-split");
    d.burgers = burgers_dataset(spec, config.data.burgers_realizations, config.data.train_snapshots,
                                data_rng, split_rng, config.data.reserve_quarter_times);
    d.train = d.burgers->train;
    d.file.generator = "burgers";
    d.file.spec = {{"nu", spec.nu},
                   {"x_lo", spec.x_lo},
                   {"x_hi", spec.x_hi},
                   {"n_x", spec.n_x},
                   {"n_t", spec.n_t},
                   {"t_final", spec.t_final},
                   {"boundary", to_string(spec.boundary)},
                   {"ic_kernel", {{"sigma_f2", spec.ic_kernel.sigma_f2}, {"l2", spec.ic_kernel.l2}}},
                   {"anchors", spec.anchors},
                   {"micro_steps", spec.micro_steps},
                   {"realizations", config.data.burgers_realizations},
                   {"train_snapshots", d.burgers->train_snapshots},
                   {"time_scale", d.burgers->time_scale},
                   {"time_offset", d.burgers->time_offset}};
    d.file.data = d.train;
  } else {
    const BenchmarkSpec spec = benchmark_spec(config);
    d.train = benchmark_dataset(spec, data_rng);
    d.file.generator = "appendix_benchmark";
    d.file.spec = {{"kernel", {{"sigma_f2", spec.kernel.sigma_f2}, {"l2", spec.kernel.l2}}},
                   {"paths", spec.paths},
                   {"points_per_path", spec.points_per_path},
                   {"x_lo", spec.x_lo},
                   {"x_hi", spec.x_hi}};
    d.file.data = d.train;
  }
  return d;
}

TrainedExperiment train_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream cfg(join(out_dir, "config.ini"), std::ios::binary);
    cfg << serialize_config(config);
  }
  TrainedExperiment t;
  t.data = generate_data(config);
  save_dataset(t.data.file, join(out_dir, "dataset.txt"));
  if (is_multifidelity(config.id)) save_dataset(t.data.file_single, join(out_dir, "dataset_single.txt"));

  if (config.id != ExperimentId::multifidelity_single)
    t.primary = train_one(config, t.data.train, "primary", join(out_dir, "loss_history.csv"),
                          join(out_dir, "checkpoint.json"));
  if (is_multifidelity(config.id))
    t.single = train_one(config, t.data.train_single, "single", join(out_dir, "loss_history_single.csv"),
                         join(out_dir, "checkpoint_single.json"));
  return t;
}

ExperimentReport evaluate_experiment(const ExperimentConfig& config, const TrainedExperiment& trained,
                                     const std::string& out_dir) {
  MetricSink sink;
  if (trained.primary) sink.add_history("", trained.primary->history);
  if (trained.single) sink.add_history("sf_", trained.single->history);
  if (is_regression(config.id))
    evaluate_regression(config, trained, out_dir, sink);
  else if (is_multifidelity(config.id))
    evaluate_multifidelity(config, trained, out_dir, sink);
  else if (config.id == ExperimentId::burgers)
    evaluate_burgers(config, trained, out_dir, sink);
  else
    evaluate_appendix(config, trained, out_dir, sink);
  ExperimentReport report;
  report.output_dir = out_dir;
  report.metrics = sink.take();
  if (trained.primary) report.history = trained.primary->history;
  if (trained.single) report.history_single = trained.single->history;
  write_metrics(join(out_dir, "metrics.csv"), provenance_of(config), report.metrics);
  return report;
}

ExperimentReport evaluate_saved(const ExperimentConfig& config, const std::string& out_dir) {
  TrainedExperiment t;
  t.data = generate_data(config);
  if (config.id != ExperimentId::multifidelity_single)
    t.primary = from_checkpoint(join(out_dir, "checkpoint.json"), join(out_dir, "loss_history.csv"));
  if (is_multifidelity(config.id))
    t.single = from_checkpoint(join(out_dir, "checkpoint_single.json"),
                               join(out_dir, "loss_history_single.csv"));
  return evaluate_experiment(config, t, out_dir);
}

ExperimentReport run(const ExperimentConfig& config) {
  const std::string dir = resolve_output_dir(config);
  const TrainedExperiment t = train_experiment(config, dir);
  return evaluate_experiment(config, t, dir);
}

double ExperimentReport::metric(std::string_view name) const {
  for (const auto& [n, v] : metrics)
    if (n == name) return v;
  return kNaN;
}

Provenance provenance_of(const ExperimentConfig& config) {
  return Provenance{config_hash(config), config.seed, std::string(kCodeVersion)};
}

double discriminator_tail_mean(const LossHistory& h, std::size_t window) {
  if (h.empty()) return kNaN;
  const std::size_t n = std::min(window, h.size());
  const double sum = std::accumulate(h.discriminator.end() - static_cast<std::ptrdiff_t>(n),
                                     h.discriminator.end(), 0.0);
  return -sum / static_cast<double>(n);
}

void tune_allocator() {
#if defined(__GLIBC__)
  constexpr int kThreshold = 256 << 20;
  mallopt(M_MMAP_THRESHOLD, kThreshold);
  mallopt(M_TRIM_THRESHOLD, kThreshold);
#endif
}

}  // namespace cagm::experiment
