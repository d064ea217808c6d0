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

#include <functional>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "rcnn/cli.hpp"
#include "rcnn/seed.hpp"

namespace rcnn::cli {

namespace {

struct Field {
  std::string section, key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string trim(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  const auto t = trim(s);
  if (t.empty()) return parts;
  boost::algorithm::split(parts, t, boost::is_any_of(","));
  for (auto& p : parts) p = trim(p);
  return parts;
}

template <class T>
T parse_number(const std::string& s) {
  std::istringstream in(trim(s));
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw ConfigError(fmt::format("'{}' is not a valid number", s));
  return v;
}

bool parse_bool(const std::string& s) {
  const auto t = boost::algorithm::to_lower_copy(trim(s));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", s));
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

template <class T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  for (const auto& p : split_list(s)) out.push_back(parse_number<T>(p));
  return out;
}

Dims3 parse_dims(const std::string& s) {
  const auto v = parse_list<int>(s);
  if (v.size() != 3) throw ConfigError(fmt::format("'{}' is not three dimensions", s));
  return {v[0], v[1], v[2]};
}

std::string fmt_dims(const Dims3& d) { return fmt::format("{},{},{}", d.nx, d.ny, d.nz); }

template <class M>
Field num(std::string section, std::string key, M RunConfig::*member) {
  return {std::move(section), std::move(key),
          [member](const RunConfig& c) { return fmt::format("{}", c.*member); },
          [member](RunConfig& c, const std::string& v) { c.*member = parse_number<M>(v); }};
}

// Field living in a nested struct reached through `access`.
template <class T, class A>
Field nested(std::string section, std::string key, A access, std::function<std::string(const T&)> get,
             std::function<T(const std::string&)> parse) {
  return {std::move(section), std::move(key),
          [access, get](const RunConfig& c) { return get(access(c)); },
          [access, parse](RunConfig& c, const std::string& v) { access(c) = parse(v); }};
}

template <class T, class A>
Field nested_num(std::string section, std::string key, A access) {
  return nested<T>(std::move(section), std::move(key), access,
                   [](const T& v) { return fmt::format("{}", v); },
                   [](const std::string& s) { return parse_number<T>(s); });
}

template <class A>
Field nested_bool(std::string section, std::string key, A access) {
  return nested<bool>(std::move(section), std::move(key), access,
                      [](const bool& v) { return std::string(v ? "true" : "false"); }, parse_bool);
}

template <class A>
Field nested_dims(std::string section, std::string key, A access) {
  return nested<Dims3>(std::move(section), std::move(key), access, fmt_dims, parse_dims);
}

template <class A>
Field nested_ints(std::string section, std::string key, A access) {
  return nested<std::vector<int>>(
      std::move(section), std::move(key), access,
      [](const std::vector<int>& v) { return fmt::format("{}", fmt::join(v, ",")); },
      parse_list<int>);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(num("run", "seed", &RunConfig::seed));
    f.push_back({"run", "out", [](const RunConfig& c) { return c.out.string(); },
                 [](RunConfig& c, const std::string& v) { c.out = trim(v); }});
    f.push_back(num("run", "jobs", &RunConfig::jobs));

    f.push_back(nested_dims("synth", "field_dims", [](auto& c) -> auto& { return c.synth.dims; }));
    f.push_back(nested_num<int>("synth", "n_surfaces", [](auto& c) -> auto& { return c.synth.n_surfaces; }));
    f.push_back(nested_num<int>("synth", "min_cosines", [](auto& c) -> auto& { return c.synth.min_cosines; }));
    f.push_back(nested_num<int>("synth", "max_cosines", [](auto& c) -> auto& { return c.synth.max_cosines; }));
    f.push_back(nested_num<double>("synth", "min_amplitude", [](auto& c) -> auto& { return c.synth.min_amplitude; }));
    f.push_back(nested_num<double>("synth", "max_amplitude", [](auto& c) -> auto& { return c.synth.max_amplitude; }));
    f.push_back(nested_num<double>("synth", "min_wavelength", [](auto& c) -> auto& { return c.synth.min_wavelength; }));
    f.push_back(nested_num<double>("synth", "max_wavelength", [](auto& c) -> auto& { return c.synth.max_wavelength; }));
    f.push_back({"synth", "target_proportion",
                 [](const RunConfig& c) {
                   return c.synth.target_proportion ? fmt_double(*c.synth.target_proportion)
                                                    : std::string("none");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (boost::algorithm::iequals(trim(v), "none")) c.synth.target_proportion.reset();
                   else c.synth.target_proportion = parse_number<double>(v);
                 }});
    f.push_back(nested_num<double>("synth", "proportion_min", [](auto& c) -> auto& { return c.synth.proportion_min; }));
    f.push_back(nested_num<double>("synth", "proportion_max", [](auto& c) -> auto& { return c.synth.proportion_max; }));

    f.push_back(nested_dims("domain", "domain_dims", [](auto& c) -> auto& { return c.domain; }));

    f.push_back(nested<std::vector<double>>(
        "sample", "fractions", [](auto& c) -> auto& { return c.fractions; },
        [](const std::vector<double>& v) {
          std::vector<std::string> s;
          for (double x : v) s.push_back(fmt_double(x));
          return boost::algorithm::join(s, ",");
        },
        parse_list<double>));

    f.push_back(nested_num<int>("train", "chain_length", [](auto& c) -> auto& { return c.rcnn.chain_length; }));
    f.push_back(nested_num<int>("train", "num_categories", [](auto& c) -> auto& { return c.rcnn.num_categories; }));
    f.push_back(nested_dims("train", "search_grid", [](auto& c) -> auto& { return c.rcnn.window.sg; }));
    f.push_back(nested_dims("train", "inner_pattern", [](auto& c) -> auto& { return c.rcnn.window.ip; }));
    f.push_back(nested_ints("train", "conv_channels", [](auto& c) -> auto& { return c.rcnn.conv_channels; }));
    f.push_back(nested_ints("train", "pool_layers", [](auto& c) -> auto& { return c.rcnn.pool_layers; }));
    f.push_back(nested_num<int>("train", "filter_size", [](auto& c) -> auto& { return c.rcnn.filter_size; }));
    f.push_back(nested_ints("train", "hidden_widths", [](auto& c) -> auto& { return c.rcnn.hidden_widths; }));
    f.push_back(nested<nn::Activation>(
        "train", "activation", [](auto& c) -> auto& { return c.rcnn.activation; },
        [](const nn::Activation& a) { return std::string(nn::to_string(a)); },
        [](const std::string& s) {
          try {
            return nn::parse_activation(trim(s));
          } catch (const std::exception& e) {
            throw ConfigError(e.what());
          }
        }));
    f.push_back(nested_num<double>("train", "bn_momentum", [](auto& c) -> auto& { return c.rcnn.bn_momentum; }));
    f.push_back(nested_num<double>("train", "per_dc", [](auto& c) -> auto& { return c.rcnn.per_dc; }));
    f.push_back(nested<HardDataLayout>(
        "train", "hard_data_layout", [](auto& c) -> auto& { return c.rcnn.hard_data_layout; },
        [](const HardDataLayout& l) {
          return std::string(l == HardDataLayout::Columns ? "columns" : "scattered");
        },
        [](const std::string& s) {
          const auto t = trim(s);
          if (t == "columns") return HardDataLayout::Columns;
          if (t == "scattered") return HardDataLayout::Scattered;
          throw ConfigError(fmt::format("unknown hard data layout '{}'", s));
        }));
    f.push_back(nested_num<int>("train", "epochs", [](auto& c) -> auto& { return c.rcnn.epochs; }));
    f.push_back(nested_num<int>("train", "batch_size", [](auto& c) -> auto& { return c.rcnn.batch_size; }));
    f.push_back(nested_num<std::size_t>("train", "pairs_per_epoch", [](auto& c) -> auto& { return c.rcnn.pairs_per_epoch; }));
    f.push_back(nested_num<double>("train", "freeze_fraction", [](auto& c) -> auto& { return c.rcnn.freeze_fraction; }));
    f.push_back(nested<AssignmentMode>(
        "train", "assignment", [](auto& c) -> auto& { return c.rcnn.assignment; },
        [](const AssignmentMode& a) { return std::string(a == AssignmentMode::Draw ? "draw" : "argmax"); },
        [](const std::string& s) {
          const auto t = trim(s);
          if (t == "draw") return AssignmentMode::Draw;
          if (t == "argmax") return AssignmentMode::Argmax;
          throw ConfigError(fmt::format("unknown assignment mode '{}'", s));
        }));
    f.push_back(nested_bool("train", "resimulate_each_epoch", [](auto& c) -> auto& { return c.rcnn.resimulate_each_epoch; }));
    f.push_back(nested_bool("train", "early_stop", [](auto& c) -> auto& { return c.rcnn.early_stop; }));
    f.push_back(nested_num<double>("train", "learning_rate", [](auto& c) -> auto& { return c.rcnn.adam.lr; }));
    f.push_back(nested_bool("train", "checkpoint_every_epoch", [](auto& c) -> auto& { return c.checkpoint_every_epoch; }));
    f.push_back({"train", "resume", [](const RunConfig& c) { return c.resume; },
                 [](RunConfig& c, const std::string& v) { c.resume = trim(v); }});

    f.push_back(num("simulate", "realizations", &RunConfig::realizations));
    f.push_back(num("simulate", "sim_fraction", &RunConfig::sim_fraction));
    f.push_back({"simulate", "sectors",
                 [](const RunConfig& c) { return boost::algorithm::join(c.sectors, ","); },
                 [](RunConfig& c, const std::string& v) { c.sectors = split_list(v); }});

    f.push_back(num("metrics", "category", &RunConfig::category));
    f.push_back(num("metrics", "max_lag_horizontal", &RunConfig::max_lag_horizontal));
    f.push_back(num("metrics", "max_lag_vertical", &RunConfig::max_lag_vertical));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

}  // namespace

Dims3 RunConfig::sector_dims() const { return {synth.dims.nx / 2, synth.dims.ny / 2, synth.dims.nz}; }

Dims3 RunConfig::domain_dims() const { return domain.nx == 0 ? sector_dims() : domain; }

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be positive");
  synth.validate();
  if (synth.dims.nx % 2 != 0 || synth.dims.ny % 2 != 0) throw ConfigError("field nx and ny must be even");
  const Dims3 s = sector_dims(), d = domain_dims();
  if (!d.positive() || d.nx > s.nx || d.ny > s.ny || d.nz > s.nz) {
    throw ConfigError("domain " + to_string(d) + " does not fit in sector " + to_string(s));
  }
  for (double f : fractions)
    if (!(f > 0.0 && f < 1.0)) throw ConfigError(fmt::format("sampling fraction {} outside (0, 1)", f));
  rcnn.validate();
  if (rcnn.num_categories != 2) throw ConfigError("the synthetic pipeline is binary (num_categories = 2)");
  if (realizations < 1) throw ConfigError("realizations must be positive");
  for (const auto& s : sectors)
    if (s != "ti" && s != "s1" && s != "s2" && s != "s3") throw ConfigError("unknown sector '" + s + "'");
  if (category < 1 || category > rcnn.num_categories) throw ConfigError("metrics category out of range");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string config_section(const std::string& key) { return field(key).section; }

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  try {
    field(key).set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

std::string get_value(const RunConfig& config, const std::string& key) { return field(key).get(config); }

RunConfig load_run_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(fmt::format("{}: key '{}' outside a section", path.string(), section));
    }
    for (const auto& [key, value] : body) {
      if (config_section(key) != section) {
        throw ConfigError(fmt::format("{}: key '{}' belongs in [{}], found in [{}]", path.string(), key,
                                      config_section(key), section));
      }
      apply_override(config, key, value.data());
    }
  }
  return config;
}

std::string to_ini(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += fmt::format("{}[{}]\n", section.empty() ? "" : "\n", f.section);
      section = f.section;
    }
    out += fmt::format("{} = {}\n", f.key, f.get(config));
  }
  return out;
}

std::uint64_t stage_seed(const RunConfig& config, const std::string& label, std::uint64_t index) {
  return derive_seed(config.seed, label, index);
}

RCNNConfig training_config(const RunConfig& config) {
  auto c = config.rcnn;
  c.seed = stage_seed(config, "train");
  return c;
}

}  // namespace rcnn::cli
