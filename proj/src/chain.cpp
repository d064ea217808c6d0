/* Copyright 2026 The rcnn-mps Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "rcnn/chain.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "rcnn/nn/loss.hpp"
#include "rcnn/seed.hpp"

namespace rcnn {

using nlohmann::json;

void RCNNConfig::validate() const {
  if (chain_length < 1) throw std::invalid_argument("chain length must be at least 1");
  if (num_categories < 1) throw std::invalid_argument("need at least one category");
  window.validate();
  if (!(per_dc > 0.0 && per_dc < 1.0)) {
    throw std::invalid_argument(fmt::format("perDC {} outside (0, 1)", per_dc));
  }
  if (!(freeze_fraction > 0.0 && freeze_fraction <= 1.0)) {
    throw std::invalid_argument(fmt::format("freeze fraction {} outside (0, 1]", freeze_fraction));
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  architecture(chain_length).validate();
}

nn::StackArchitecture RCNNConfig::architecture(int chain_index) const {
  nn::StackArchitecture a;
  a.input_dims = window.sg;
  a.input_channels = chain_index * (num_categories + 1);
  a.output_dims = window.ip;
  a.num_categories = num_categories;
  a.conv_channels = conv_channels;
  a.pool_layers = pool_layers;
  a.filter_size = filter_size;
  a.hidden_widths = hidden_widths;
  a.activation = activation;
  a.bn_momentum = bn_momentum;
  return a;
}

namespace {

json dims_json(const Dims3& d) { return json::array({d.nx, d.ny, d.nz}); }
Dims3 dims_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

}  // namespace

json to_json(const RCNNConfig& c) {
  return json{
      {"chain_length", c.chain_length},
      {"num_categories", c.num_categories},
      {"search_grid", dims_json(c.window.sg)},
      {"inner_pattern", dims_json(c.window.ip)},
      {"conv_channels", c.conv_channels},
      {"pool_layers", c.pool_layers},
      {"filter_size", c.filter_size},
      {"hidden_widths", c.hidden_widths},
      {"activation", std::string(nn::to_string(c.activation))},
      {"bn_momentum", c.bn_momentum},
      {"per_dc", c.per_dc},
      {"hard_data_layout", c.hard_data_layout == HardDataLayout::Columns ? "columns" : "scattered"},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"pairs_per_epoch", c.pairs_per_epoch},
      {"freeze_fraction", c.freeze_fraction},
      {"assignment", c.assignment == AssignmentMode::Draw ? "draw" : "argmax"},
      {"resimulate_each_epoch", c.resimulate_each_epoch},
      {"early_stop", c.early_stop},
      {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2},
                {"epsilon", c.adam.epsilon}}},
      {"seed", c.seed},
  };
}

RCNNConfig config_from_json(const json& j) {
  RCNNConfig c;
  c.chain_length = j.at("chain_length").get<int>();
  c.num_categories = j.at("num_categories").get<int>();
  c.window.sg = dims_from(j.at("search_grid"));
  c.window.ip = dims_from(j.at("inner_pattern"));
  c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  c.pool_layers = j.at("pool_layers").get<std::vector<int>>();
  c.filter_size = j.at("filter_size").get<int>();
  c.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  c.activation = nn::parse_activation(j.at("activation").get<std::string>());
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.per_dc = j.at("per_dc").get<double>();
  c.hard_data_layout = j.at("hard_data_layout").get<std::string>() == "columns"
                           ? HardDataLayout::Columns
                           : HardDataLayout::Scattered;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.pairs_per_epoch = j.at("pairs_per_epoch").get<std::size_t>();
  c.freeze_fraction = j.at("freeze_fraction").get<double>();
  c.assignment = j.at("assignment").get<std::string>() == "draw" ? AssignmentMode::Draw
                                                                 : AssignmentMode::Argmax;
  c.resimulate_each_epoch = j.at("resimulate_each_epoch").get<bool>();
  c.early_stop = j.at("early_stop").get<bool>();
  const auto& a = j.at("adam");
  c.adam = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
            a.at("epsilon").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

double RCNNModel::chain_mean_loss(int epoch) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : log) {
    if (e.epoch == epoch) {
      sum += e.mean_loss;
      ++n;
    }
  }
  if (n == 0) throw std::out_of_range(fmt::format("no loss recorded for epoch {}", epoch));
  return sum / n;
}

RCNNModel make_model(const RCNNConfig& config) {
  config.validate();
  RCNNModel model;
  model.config = config;
  for (int i = 1; i <= config.chain_length; ++i) {
    nn::CNNStack stack(config.architecture(i));
    stack.init_parameters(derive_seed(config.seed, "init", static_cast<std::uint64_t>(i)));
    model.chain.push_back(std::move(stack));
    nn::AdamState opt;
    opt.config = config.adam;
    model.optimizers.push_back(std::move(opt));
  }
  return model;
}

nn::Tensor assemble_input(std::span<const CategoricalGrid> domains, Index3 center, Dims3 sg) {
  if (domains.empty()) throw std::invalid_argument("assemble_input needs at least D^0");
  const int k = domains.front().num_categories();
  for (const auto& d : domains) {
    if (!(d.dims() == domains.front().dims()) || d.num_categories() != k) {
      throw std::invalid_argument("assemble_input: domains differ in dimensions or categories");
    }
  }
  nn::Tensor t(static_cast<int>(domains.size()) * (k + 1), sg.nx, sg.ny, sg.nz);
  for (std::size_t i = 0; i < domains.size(); ++i) {
    encode_window_into(domains[i], center, t, static_cast<int>(i) * (k + 1));
  }
  return t;
}

namespace {

void check_score_shape(const nn::Tensor& scores, const CategoricalGrid& target) {
  if (scores.channels() != target.num_categories() || scores.dx() != target.nx() ||
      scores.dy() != target.ny() || scores.dz() != target.nz()) {
    throw std::invalid_argument(fmt::format("loss: scores {} vs target {} with K={}",
                                            scores.shape_string(), to_string(target.dims()),
                                            target.num_categories()));
  }
}

template <typename OnNode>
double accumulate_loss(const nn::Tensor& scores, const CategoricalGrid& target, OnNode on_node) {
  check_score_shape(scores, target);
  const int k = target.num_categories();
  const std::size_t nodes = target.size();
  std::vector<double> s(k);
  double loss = 0.0;
  for (std::size_t n = 0; n < nodes; ++n) {
    const int truth = target[n];
    if (truth == kUnknown) continue;
    for (int c = 0; c < k; ++c) s[c] = scores[c * nodes + n];
    const auto p = nn::softmax(s);
    loss += nn::cross_entropy(p, truth);
    on_node(n, p, truth);
  }
  return loss;
}

}  // namespace

double rcnn_loss(const nn::Tensor& scores, const CategoricalGrid& target) {
  return accumulate_loss(scores, target, [](std::size_t, const auto&, int) {});
}

double rcnn_loss_grad(const nn::Tensor& scores, const CategoricalGrid& target, nn::Tensor& grad) {
  grad = nn::Tensor(scores.channels(), scores.dx(), scores.dy(), scores.dz());
  const std::size_t nodes = target.size();
  return accumulate_loss(scores, target, [&](std::size_t n, const auto& p, int truth) {
    const auto g = nn::softmax_cross_entropy_grad(p, truth);
    for (std::size_t c = 0; c < g.size(); ++c) grad[c * nodes + n] = g[c];
  });
}

TrainingDatabase::TrainingDatabase(int chain_index, const CategoricalGrid& ti,
                                   const std::vector<CategoricalGrid>& domains,
                                   std::vector<std::size_t> centers, WindowSpec window)
    : chain_index_(chain_index),
      ti_(&ti),
      domains_(&domains),
      centers_(std::move(centers)),
      window_(window) {
  if (chain_index < 1 || static_cast<std::size_t>(chain_index) >= domains.size() + 1) {
    throw std::invalid_argument("database index outside the chain");
  }
}

nn::Tensor TrainingDatabase::input(std::size_t k) const {
  std::span<const CategoricalGrid> inputs(domains_->data(), static_cast<std::size_t>(chain_index_));
  return assemble_input(inputs, center(k), window_.sg);
}

CategoricalGrid TrainingDatabase::target(std::size_t k) const {
  return extract_window(*ti_, center(k), window_.ip);
}

std::vector<TrainingDatabase> build_databases(const CategoricalGrid& ti,
                                              const std::vector<CategoricalGrid>& domains,
                                              std::span<const std::size_t> path,
                                              const WindowSpec& window) {
  if (domains.size() < 2) throw std::invalid_argument("need D^0 and at least D^1");
  if (!ti.fully_informed()) throw std::invalid_argument("training image must be fully informed");
  for (const auto& d : domains) {
    if (!(d.dims() == ti.dims())) throw std::invalid_argument("domain dimensions differ from TI");
  }
  std::vector<TrainingDatabase> dbs;
  const std::vector<std::size_t> centers(path.begin(), path.end());
  for (int i = 1; i < static_cast<int>(domains.size()); ++i) {
    dbs.emplace_back(i, ti, domains, centers, window);
  }
  return dbs;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr char kMagic[8] = {'R', 'C', 'N', 'N', 'M', 'P', 'S', '\0'};

void write_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void read_doubles(std::istream& in, std::span<double> v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (!in) throw std::runtime_error("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const RCNNModel& model, const std::filesystem::path& path) {
  json meta;
  meta["config"] = to_json(model.config);
  meta["epochs_completed"] = model.epochs_completed;
  meta["converged"] = model.converged;
  json log = json::array();
  for (const auto& e : model.log) log.push_back({e.epoch, e.cnn_index, e.mean_loss});
  meta["log"] = log;
  json members = json::array();
  for (std::size_t i = 0; i < model.chain.size(); ++i) {
    const auto& a = model.chain[i].architecture();
    std::vector<std::size_t> sizes;
    for (const auto& p : model.chain[i].parameter_values()) sizes.push_back(p.size());
    members.push_back({{"input_channels", a.input_channels},
                       {"parameter_sizes", sizes},
                       {"adam_t", model.optimizers[i].t},
                       {"has_moments", !model.optimizers[i].m.empty()}});
  }
  meta["chain"] = members;
  const std::string text = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t i = 0; i < model.chain.size(); ++i) {
    const auto& stack = model.chain[i];
    for (const auto& p : stack.parameter_values()) write_doubles(out, p);
    for (const auto& b : stack.buffer_values()) write_doubles(out, b);
    const auto& opt = model.optimizers[i];
    for (const auto& m : opt.m) write_doubles(out, m);
    for (const auto& v : opt.v) write_doubles(out, v);
  }
  if (!out) throw std::runtime_error("write failed for checkpoint " + path.string());
}

RCNNModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not an rcnn-mps checkpoint");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kCheckpointVersion) {
    throw std::runtime_error(fmt::format("unsupported checkpoint version {}", version));
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint truncated in metadata");
  const json meta = json::parse(text);

  RCNNModel model = make_model(config_from_json(meta.at("config")));
  model.epochs_completed = meta.at("epochs_completed").get<int>();
  model.converged = meta.at("converged").get<bool>();
  for (const auto& e : meta.at("log")) {
    model.log.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
  }
  const auto& members = meta.at("chain");
  if (members.size() != model.chain.size()) throw std::runtime_error("checkpoint chain length mismatch");
  for (std::size_t i = 0; i < model.chain.size(); ++i) {
    auto& stack = model.chain[i];
    const auto sizes = members[i].at("parameter_sizes").get<std::vector<std::size_t>>();
    auto params = stack.parameters();
    if (sizes.size() != params.size()) throw std::runtime_error("checkpoint parameter layout mismatch");
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (sizes[p] != params[p].value.size()) {
        throw std::runtime_error("checkpoint parameter size mismatch");
      }
      read_doubles(in, params[p].value);
    }
    for (const auto& b : stack.buffers()) read_doubles(in, b.value);
    auto& opt = model.optimizers[i];
    opt.t = members[i].at("adam_t").get<std::int64_t>();
    if (members[i].at("has_moments").get<bool>()) {
      opt.m.clear();
      opt.v.clear();
      for (const auto& p : params) opt.m.emplace_back(p.value.size());
      for (const auto& p : params) opt.v.emplace_back(p.value.size());
      for (auto& m : opt.m) read_doubles(in, m);
      for (auto& v : opt.v) read_doubles(in, v);
    }
  }
  return model;
}

}  // namespace rcnn
