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

#include "cagm/experiment/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "cagm/errors.hpp"
#include "cagm/format.hpp"

namespace cagm::experiment {

using nlohmann::json;

namespace {

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_from(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json row_to_json(const Eigen::RowVectorXd& r) { return std::vector<double>(r.data(), r.data() + r.size()); }

Eigen::RowVectorXd row_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json network_to_json(const Mlp<double>& net) {
  json params = json::array();
  for (const Matrix& p : net.parameters()) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j) flat.push_back(p(i, j));
    params.push_back(std::move(flat));
  }
  return {{"layer_widths", net.widths()}, {"parameters", std::move(params)}};
}

Mlp<double> network_from_json(const json& j, const std::string& name) {
  Mlp<double> net(j.at("layer_widths").get<std::vector<Eigen::Index>>());
  const json& params = j.at("parameters");
  if (!params.is_array() || params.size() != net.parameters().size())
    throw FormatError("checkpoint: " + name + " has " + std::to_string(params.size()) +
                      " parameter arrays, widths imply " +
                      std::to_string(net.parameters().size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = net.parameters()[k];
    const auto flat = params[k].get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(p.size()))
      throw FormatError("checkpoint: " + name + " parameter " + std::to_string(k) + " has " +
                        std::to_string(flat.size()) + " values, expected " +
                        std::to_string(p.size()));
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = flat[n++];
  }
  return net;
}

json train_to_json(const TrainConfig& t) {
  return {{"lambda", t.lambda},        {"beta", t.beta},
          {"k_g", t.k_g},              {"k_d", t.k_d},
          {"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
          {"iterations", t.iterations}, {"seed", t.seed},
          {"n_mc", t.n_mc}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.lambda = j.at("lambda").get<double>();
  t.beta = j.at("beta").get<double>();
  t.k_g = j.at("k_g").get<std::size_t>();
  t.k_d = j.at("k_d").get<std::size_t>();
  t.learning_rate = j.at("learning_rate").get<double>();
  t.batch_size = j.at("batch_size").get<std::size_t>();
  t.iterations = j.at("iterations").get<std::size_t>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.n_mc = j.at("n_mc").get<std::size_t>();
  return t;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw FormatError("write to '" + path + "' failed");
}

}  // namespace

Normalization Normalization::identity(Eigen::Index input_dim) {
  Normalization n;
  n.x_mean = Eigen::RowVectorXd::Zero(input_dim);
  n.x_scale = Eigen::RowVectorXd::Ones(input_dim);
  return n;
}

Normalization Normalization::fit(const PairedDataset<double>& data) {
  data.validate();
  Normalization n;
  n.x_mean = data.inputs.colwise().mean();
  n.x_scale = (data.inputs.rowwise() - n.x_mean).array().square().colwise().mean().sqrt();
  for (auto& s : n.x_scale)
    if (!(s > 0.0)) s = 1.0;
  n.y_mean = data.outputs.mean();
  n.y_scale = std::sqrt((data.outputs.array() - n.y_mean).square().mean());
  if (!(n.y_scale > 0.0)) n.y_scale = 1.0;
  return n;
}

Matrix Normalization::to_network_x(const Matrix& x) const {
  if (x.cols() != x_mean.size())
    throw DimensionError("normalization: input has " + std::to_string(x.cols()) +
                         " columns, expected " + std::to_string(x_mean.size()));
  return ((x.rowwise() - x_mean).array().rowwise() / x_scale.array()).matrix();
}

Matrix Normalization::to_network_y(const Matrix& y) const {
  return ((y.array() - y_mean) / y_scale).matrix();
}

Matrix Normalization::from_network_y(const Matrix& y) const {
  return (y.array() * y_scale + y_mean).matrix();
}

PairedDataset<double> Normalization::apply(const PairedDataset<double>& data) const {
  PairedDataset<double> out;
  out.inputs = to_network_x(data.inputs);
  out.outputs = to_network_y(data.outputs);
  out.labels = data.labels;
  return out;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  const CagmModel<double>& m = ckpt.model;
  return {
      {"schema_version", kCheckpointSchemaVersion},
      {"experiment", ckpt.experiment},
      {"input_dim", m.input_dim},
      {"output_dim", m.output_dim},
      {"latent_dim", m.latent_dim},
      {"generator", network_to_json(m.generator)},
      {"encoder", network_to_json(m.encoder)},
      {"discriminator", network_to_json(m.discriminator)},
      {"train_config", train_to_json(ckpt.train)},
      {"final_losses",
       {{"discriminator", real_or_null(ckpt.final_discriminator_loss)},
        {"generator", real_or_null(ckpt.final_generator_loss)}}},
      {"normalization",
       {{"x_mean", row_to_json(ckpt.normalization.x_mean)},
        {"x_scale", row_to_json(ckpt.normalization.x_scale)},
        {"y_mean", ckpt.normalization.y_mean},
        {"y_scale", ckpt.normalization.y_scale}}},
  };
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion)
      throw FormatError("checkpoint: schema_version " + std::to_string(version) +
                        " is not supported (expected " +
                        std::to_string(kCheckpointSchemaVersion) + ")");
    Checkpoint c;
    c.experiment = doc.at("experiment").get<std::string>();
    c.model.input_dim = doc.at("input_dim").get<Eigen::Index>();
    c.model.output_dim = doc.at("output_dim").get<Eigen::Index>();
    c.model.latent_dim = doc.at("latent_dim").get<Eigen::Index>();
    c.model.generator = network_from_json(doc.at("generator"), "generator");
    c.model.encoder = network_from_json(doc.at("encoder"), "encoder");
    c.model.discriminator = network_from_json(doc.at("discriminator"), "discriminator");
    c.model.validate();
    c.train = train_from_json(doc.at("train_config"));
    c.final_discriminator_loss = real_from(doc.at("final_losses").at("discriminator"));
    c.final_generator_loss = real_from(doc.at("final_losses").at("generator"));
    const json& n = doc.at("normalization");
    c.normalization.x_mean = row_from_json(n.at("x_mean"));
    c.normalization.x_scale = row_from_json(n.at("x_scale"));
    c.normalization.y_mean = n.at("y_mean").get<double>();
    c.normalization.y_scale = n.at("y_scale").get<double>();
    if (c.normalization.x_mean.size() != c.model.input_dim ||
        c.normalization.x_scale.size() != c.model.input_dim)
      throw FormatError("checkpoint: normalization width does not match input_dim");
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_text_file(path, checkpoint_to_json(ckpt).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(doc);
}

void save_dataset(const DatasetFile& file, const std::string& path) {
  const PairedDataset<double>& d = file.data;
  d.validate();
  const bool labels = !d.labels.empty();
  const json header{{"generator", file.generator},
                    {"seed", file.seed},
                    {"spec", file.spec},
                    {"rows", d.size()},
                    {"input_dim", d.inputs.cols()},
                    {"output_dim", d.outputs.cols()},
                    {"labels", labels}};
  std::string text;
  text += kDatasetMagic;
  text += "\n" + header.dump() + "\n";
  for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
    std::string line;
    for (Eigen::Index j = 0; j < d.inputs.cols(); ++j) line += format_real(d.inputs(i, j)) + ' ';
    for (Eigen::Index j = 0; j < d.outputs.cols(); ++j) line += format_real(d.outputs(i, j)) + ' ';
    if (labels) line += format_real(d.labels[static_cast<std::size_t>(i)]) + ' ';
    line.back() = '\n';
    text += line;
  }
  write_text_file(path, text);
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("dataset: cannot open '" + path + "'");
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kDatasetMagic)
    throw FormatError("dataset '" + path + "': missing '" + std::string(kDatasetMagic) + "' line");
  if (!std::getline(in, header_line)) throw FormatError("dataset '" + path + "': missing header");
  DatasetFile f;
  std::size_t rows = 0;
  Eigen::Index dx = 0, dy = 0;
  bool labels = false;
  try {
    const json h = json::parse(header_line);
    f.generator = h.at("generator").get<std::string>();
    f.seed = h.at("seed").get<std::uint64_t>();
    f.spec = h.at("spec");
    rows = h.at("rows").get<std::size_t>();
    dx = h.at("input_dim").get<Eigen::Index>();
    dy = h.at("output_dim").get<Eigen::Index>();
    labels = h.at("labels").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError("dataset '" + path + "': bad header: " + e.what());
  }
  const auto n = static_cast<Eigen::Index>(rows);
  f.data.inputs.resize(n, dx);
  f.data.outputs.resize(n, dy);
  if (labels) f.data.labels.resize(rows);
  std::string line;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw FormatError("dataset '" + path + "': truncated after " + std::to_string(i) + " of " +
                        std::to_string(rows) + " rows");
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    auto next = [&](Eigen::Index col) {
      std::string tok;
      if (!(ss >> tok))
        throw FormatError("dataset '" + path + "': row " + std::to_string(i) + " has too few fields (column " +
                          std::to_string(col) + ")");
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
      } catch (const std::exception&) {
        throw FormatError("dataset '" + path + "': row " + std::to_string(i) + ": bad number '" + tok + "'");
      }
    };
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < dx; ++j) f.data.inputs(i, j) = next(col++);
    for (Eigen::Index j = 0; j < dy; ++j) f.data.outputs(i, j) = next(col++);
    if (labels) f.data.labels[static_cast<std::size_t>(i)] = next(col++);
    std::string extra;
    if (ss >> extra) throw FormatError("dataset '" + path + "': row " + std::to_string(i) + " has extra fields");
  }
  if (std::getline(in, line) && !line.empty())
    throw FormatError("dataset '" + path + "': more rows than the header declares");
  return f;
}

std::string Provenance::line() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, config_hash);
  return "# config_hash=" + std::string(buf) + ", seed=" + std::to_string(seed) +
         ", version=" + version;
}

CsvWriter::CsvWriter(const std::string& path, const Provenance& provenance,
                     const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  out_.open(path, std::ios::binary);
  if (!out_) throw FormatError("csv: cannot open '" + path + "' for writing");
  out_ << provenance.line() << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_real(v));
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw DimensionError("csv '" + path_ + "': row has " + std::to_string(cells.size()) +
                         " cells, header has " + std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw FormatError("csv: write to '" + path_ + "' failed");
}

}  // namespace cagm::experiment
