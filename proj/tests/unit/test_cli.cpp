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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rcnn/cli.hpp"

using namespace rcnn;
using namespace rcnn::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rcnn_unit_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

RunConfig small_run(const fs::path& out) {
  RunConfig c;
  c.seed = 11;
  c.out = out;
  c.synth.dims = {20, 20, 10};
  c.synth.n_surfaces = 2;
  c.fractions = {0.05, 0.1};
  c.rcnn.chain_length = 2;
  c.rcnn.window = {{5, 5, 5}, {3, 3, 3}};
  c.rcnn.conv_channels = {3};
  c.rcnn.pool_layers = {};
  c.rcnn.hidden_widths = {8};
  c.rcnn.epochs = 2;
  c.rcnn.batch_size = 8;
  c.rcnn.pairs_per_epoch = 16;
  c.realizations = 2;
  c.sim_fraction = 0.05;
  return c;
}

}  // namespace

TEST_CASE("config files load over the defaults") {
  const auto dir = scratch_dir("config");
  const auto ini = dir / "run.ini";
  std::ofstream(ini) << "[run]\nseed = 42\n\n[train]\nchain_length = 3\nconv_channels = 4, 4\n"
                        "activation = tanh\n\n[simulate]\nsectors = s2\n";
  auto c = load_run_config(ini);
  CHECK(c.seed == 42);
  CHECK(c.rcnn.chain_length == 3);
  CHECK(c.rcnn.conv_channels == std::vector<int>{4, 4});
  CHECK(c.sectors == std::vector<std::string>{"s2"});
  CHECK(c.realizations == RunConfig{}.realizations);

  apply_override(c, "epochs", "7");
  CHECK(c.rcnn.epochs == 7);
  CHECK(get_value(c, "epochs") == "7");
  apply_override(c, "target_proportion", "none");
  CHECK_FALSE(c.synth.target_proportion.has_value());
  CHECK_THROWS_AS(apply_override(c, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "epochs", "many"), ConfigError);
  CHECK(config_section("freeze_fraction") == "train");

  // The resolved INI reloads to the same config.
  std::ofstream(dir / "resolved.ini") << to_ini(c);
  CHECK(to_ini(load_run_config(dir / "resolved.ini")) == to_ini(c));

  std::ofstream(ini) << "[run]\nbogus = 1\n";
  CHECK_THROWS_AS(load_run_config(ini), ConfigError);
  std::ofstream(ini) << "[run]\nepochs = 3\n";
  CHECK_THROWS_AS(load_run_config(ini), ConfigError);
}

TEST_CASE("config validation rejects impossible layouts") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.domain = {60, 10, 10};
  CHECK_THROWS(c.validate());
  c = {};
  c.synth.dims = {99, 100, 50};
  CHECK_THROWS(c.validate());
}

TEST_CASE("domain crops are centred in the sector") {
  CategoricalGrid g({6, 6, 4}, 2, 1);
  g.set(1, 1, 1, 2);
  const auto c = domain_crop(g, {4, 4, 2});
  CHECK(c.dims() == Dims3{4, 4, 2});
  CHECK(c.at(0, 0, 0) == 2);
  CHECK(domain_crop(g, g.dims()) == g);
  CHECK(fraction_label(0.05) == "0.05");
  CHECK(stage_seed(RunConfig{}, "train") != stage_seed(RunConfig{}, "gen-ti"));
  CHECK(training_config(RunConfig{}).seed == stage_seed(RunConfig{}, "train"));
}

TEST_CASE("pipeline stages write their artefacts") {
  const auto out = scratch_dir("pipeline");
  const auto c = small_run(out);
  cmd_gen_ti(c);
  for (const char* f : {"field.gslib", "ti.gslib", "s1.gslib", "s2.gslib", "s3.gslib", "params.json", "config.ini"})
    CHECK(fs::exists(out / "ti" / f));
  const auto params = nlohmann::json::parse(slurp(out / "ti" / "params.json"));
  CHECK(params.at("seed").get<std::uint64_t>() == 11);
  CHECK(params.at("generator_seed").get<std::uint64_t>() == stage_seed(c, "gen-ti"));

  const auto ti_bytes = slurp(out / "ti" / "ti.gslib");
  cmd_gen_ti(c);
  CHECK(slurp(out / "ti" / "ti.gslib") == ti_bytes);

  cmd_sample(c);
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(out / "samples")) csvs += e.path().extension() == ".csv";
  CHECK(csvs == 6);  // three sectors, two fractions

  cmd_train(c);
  CHECK(fs::exists(out / "train" / "model.ckpt"));
  CHECK(line_count(out / "train" / "loss.csv") == 1 + 2 * 2);

  cmd_simulate(c);
  const auto manifest = nlohmann::json::parse(slurp(out / "sim" / "manifest.json"));
  CHECK(manifest.size() == 6);
  for (const auto& entry : manifest) {
    CHECK(fs::exists(out / "sim" / entry.at("file").get<std::string>()));
    CHECK(entry.at("seed").is_number_unsigned());
  }
  CHECK(manifest[0].at("seed") != manifest[2].at("seed"));

  cmd_metrics(c);
  const auto summary = nlohmann::json::parse(slurp(out / "metrics" / "summary.json"));
  for (const char* s : {"s1", "s2", "s3"}) {
    const auto& sector = summary.at("sectors").at(s);
    CHECK(sector.at("realizations").get<int>() == 2);
    CHECK(sector.at("conditioning").at("violations").get<int>() == 0);
    CHECK(fs::exists(out / "metrics" / s / "etype.gslib"));
  }
}

TEST_CASE("failed stages are quarantined") {
  const auto out = scratch_dir("failure");
  const auto c = small_run(out);
  CHECK_THROWS_AS(cmd_sample(c), StageError);
  CHECK_FALSE(fs::exists(out / "samples"));
  CHECK(fs::exists(out / "samples.failed" / "config.ini"));
  CHECK_FALSE(fs::exists(out / "samples.staging"));
}

TEST_CASE("command line entry point") {
  const auto out = scratch_dir("argv");
  const std::string out_arg = out.string();
  std::vector<std::string> args{"rcnn-mps", "print-config", "--epochs", "9", "--out", out_arg};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::stringstream captured;
  auto* old = std::cout.rdbuf(captured.rdbuf());
  const int status = run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  CHECK(status == 0);
  CHECK(captured.str().find("epochs = 9") != std::string::npos);

  std::vector<std::string> bad{"rcnn-mps", "print-config", "--epochs", "zero"};
  std::vector<char*> bad_argv;
  for (auto& a : bad) bad_argv.push_back(a.data());
  CHECK(run(static_cast<int>(bad_argv.size()), bad_argv.data()) != 0);
}
