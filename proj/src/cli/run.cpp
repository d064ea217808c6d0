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

#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rcnn/cli.hpp"

namespace rcnn::cli {

int run(int argc, char** argv) {
  CLI::App app{"Recursive CNN multiple-point simulation pipeline"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  bool verbose = false;
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // Every config key is also a flag of the same name; --seed, --out and --jobs among them.
  std::map<std::string, std::string> overrides;
  for (const auto& key : config_keys()) {
    app.add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
        "Override [" + config_section(key) + "] " + key);
  }

  struct Command {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
  };
  const Command commands[] = {
      {"gen-ti", "Generate the synthetic field and split it into sectors", cmd_gen_ti},
      {"sample", "Draw drill-hole samples from each sector", cmd_sample},
      {"train", "Train the CNN chain on the training image", cmd_train},
      {"simulate", "Simulate conditional realizations per sector", cmd_simulate},
      {"metrics", "Variograms, E-type and variance maps", cmd_metrics},
      {"print-config", "Print the resolved config", nullptr},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  const std::string chosen = app.get_subcommands().front()->get_name();
  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& [key, value] : overrides) apply_override(config, key, value);
    config.validate();
    for (const auto& c : commands) {
      if (chosen != c.name) continue;
      if (c.fn == nullptr) {
        std::cout << to_ini(config);
      } else {
        c.fn(config);
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", chosen, e.what());
    return 1;
  }
  return 0;
}

}  // namespace rcnn::cli
