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

#pragma once

// Batch pipeline behind the rcnn-mps executable. Every stage reads and writes
// under RunConfig::out:
//   ti/       field, TI and sector grids, params.json
//   samples/  drill-hole CSVs per sector and fraction
//   train/    model.ckpt, loss.csv
//   sim/      <sector>/real_<r>.gslib, manifest.json
//   metrics/  <sector>/ variograms, E-type and variance maps, summary.json

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcnn/chain.hpp"
#include "rcnn/synthti.hpp"

namespace rcnn::cli {

struct RunConfig {
  // [run]
  std::uint64_t seed = 2019;
  std::filesystem::path out = "out";
  int jobs = 1;
  // [synth]; its seed is derived from the master seed.
  SurfaceModelParams synth;
  // [domain] sub-block of each sector used from `sample` on; zeros keep the sector.
  Dims3 domain{0, 0, 0};
  // [sample]
  std::vector<double> fractions{0.02, 0.05};
  // [train]; rcnn.seed is derived from the master seed.
  RCNNConfig rcnn;
  bool checkpoint_every_epoch = false;
  std::string resume;
  // [simulate]
  int realizations = 100;
  double sim_fraction = 0.05;
  std::vector<std::string> sectors{"s1", "s2", "s3"};
  // [metrics]
  int category = 2;
  int max_lag_horizontal = 0;
  int max_lag_vertical = 0;

  Dims3 sector_dims() const;
  Dims3 domain_dims() const;
  void validate() const;
};

/// Raised for unknown keys or values that do not parse.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stage failure; the message carries the stage name.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every config key, in file order.
std::vector<std::string> config_keys();
std::string config_section(const std::string& key);

/// Loads an INI file over the defaults.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_override(RunConfig& config, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& config, const std::string& key);
/// Resolved config as INI text, sections and keys in fixed order.
std::string to_ini(const RunConfig& config);

/// Sub-block of a sector grid used for sampling, training and simulation.
CategoricalGrid domain_crop(const CategoricalGrid& sector, Dims3 domain);
std::string fraction_label(double fraction);
/// Stage seed for `label` derived from the master seed.
std::uint64_t stage_seed(const RunConfig& config, const std::string& label, std::uint64_t index = 0);
/// rcnn config with the derived training seed.
RCNNConfig training_config(const RunConfig& config);

void cmd_gen_ti(const RunConfig& config);
void cmd_sample(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_simulate(const RunConfig& config);
void cmd_metrics(const RunConfig& config);

/// Parses argv and runs one subcommand; returns the process exit status.
int run(int argc, char** argv);

}  // namespace rcnn::cli
