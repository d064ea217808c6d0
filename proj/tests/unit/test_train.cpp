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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>

#include "../support/fixtures.hpp"
#include "rcnn/simulate.hpp"
#include "rcnn/train.hpp"

using namespace rcnn;
using rcnn::testing::layered_grid;
using rcnn::testing::tiny_config;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string checkpoint_bytes(const RCNNModel& m, const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  save_checkpoint(m, p);
  return file_bytes(p);
}

RCNNModel with_losses(const std::vector<double>& losses) {
  RCNNModel m;
  m.config.chain_length = 1;
  m.epochs_completed = int(losses.size());
  for (std::size_t e = 0; e < losses.size(); ++e) m.log.push_back({int(e) + 1, 1, losses[e]});
  return m;
}

/// Direct restatement of the stopping rule on a plain loss series.
bool stop_oracle(const std::vector<double>& losses) {
  std::vector<double> s;
  for (double l : losses) s.push_back(s.empty() ? l : 0.9 * s.back() + 0.1 * l);
  if (s.size() < 6) return false;
  const double before = s[s.size() - 6];
  return before - s.back() < 1e-3 * std::abs(before);
}

}  // namespace

TEST_CASE("training lowers the chain loss on a layered image") {
  const auto ti = layered_grid({16, 16, 16}, 8);
  auto c = tiny_config();
  c.epochs = 30;
  c.pairs_per_epoch = 64;
  c.early_stop = false;
  const auto m = train(ti, c);
  CHECK(m.epochs_completed == 30);
  CHECK(m.log.size() == 60);
  double first = 0.0, last = 0.0;
  for (int e = 1; e <= 3; ++e) first += m.chain_mean_loss(e);
  for (int e = 28; e <= 30; ++e) last += m.chain_mean_loss(e);
  CHECK(last < 0.6 * first);
  for (const auto& row : m.log) CHECK(std::isfinite(row.mean_loss));
}

TEST_CASE("training is deterministic and resumable") {
  const auto ti = layered_grid({12, 12, 12}, 3);
  auto c = tiny_config();
  c.epochs = 4;
  c.early_stop = false;
  const auto full = train(ti, c);
  CHECK(checkpoint_bytes(full, "rcnn_train_a.ckpt") == checkpoint_bytes(train(ti, c), "rcnn_train_b.ckpt"));

  auto half_config = c;
  half_config.epochs = 2;
  int calls = 0;
  auto partial = train(ti, half_config, {[&](const RCNNModel& m) { CHECK(m.epochs_completed == ++calls); }});
  CHECK(calls == 2);
  const auto p = fs::temp_directory_path() / "rcnn_train_half.ckpt";
  save_checkpoint(partial, p);
  auto resumed = load_checkpoint(p);
  resumed.config.epochs = 4;
  resume_training(resumed, ti);
  CHECK(resumed.log == full.log);
  CHECK(checkpoint_bytes(resumed, "rcnn_train_c.ckpt") == checkpoint_bytes(full, "rcnn_train_d.ckpt"));

  const auto reloaded = load_checkpoint(fs::temp_directory_path() / "rcnn_train_d.ckpt");
  const auto holes = sample_drillholes(ti, 0.05, 3);
  CHECK(simulate_realization(reloaded, holes, ti.dims(), 8) == simulate_realization(full, holes, ti.dims(), 8));
}

TEST_CASE("a nearly fully informed domain is reproduced") {
  const auto ti = layered_grid({12, 12, 12}, 3);
  auto c = tiny_config();
  c.per_dc = 0.99;
  c.hard_data_layout = HardDataLayout::Scattered;
  c.epochs = 40;
  c.pairs_per_epoch = 256;
  c.early_stop = false;
  const auto m = train(ti, c);
  const auto d0 = migrate_hard_data(CategoricalGrid(ti.dims(), 2), training_hard_data(ti, c)).grid;
  const std::vector<CategoricalGrid> inputs{d0};
  std::size_t right = 0, total = 0;
  for (std::size_t node = 0; node < ti.size(); node += 7) {
    const auto centre = ti.coords(node);
    const auto scores = m.chain[0].forward(assemble_input(inputs, centre, c.window.sg));
    const auto target = extract_window(ti, centre, c.window.ip);
    const std::size_t n = target.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (target[j] == kUnknown) continue;
      const int guess = scores[j] >= scores[n + j] ? 1 : 2;
      right += guess == target[j];
      ++total;
    }
  }
  CHECK(double(right) / double(total) > 0.95);
}

TEST_CASE("training hard data follow the layout and fraction") {
  const auto ti = layered_grid({10, 10, 10}, 2);
  auto c = tiny_config();
  c.per_dc = 0.1;
  const auto cols = training_hard_data(ti, c);
  CHECK(cols.samples.size() % 10 == 0);
  CHECK(cols.samples.size() >= 100);
  c.hard_data_layout = HardDataLayout::Scattered;
  CHECK(training_hard_data(ti, c).samples.size() == 100);
  for (const auto& s : cols.samples) CHECK(s.category == ti.at(int(s.x), int(s.y), int(s.z)));
}

TEST_CASE("early stop follows the smoothed five-epoch improvement") {
  const std::vector<std::vector<double>> series{
      {10, 10, 10, 10, 10},
      {10, 10, 10, 10, 10, 10},
      {10, 9, 8, 7, 6, 5, 4},
      {10, 9, 8, 7, 6, 5, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4,
       4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4},
      {5, 5, 5, 5, 5, 5, 5.1, 5.2},
  };
  for (const auto& s : series) CHECK(early_stop_reached(with_losses(s)) == stop_oracle(s));
  CHECK(early_stop_reached(with_losses(series[1])));
  CHECK_FALSE(early_stop_reached(with_losses(series[2])));
}

TEST_CASE("early stop ends training before the epoch budget") {
  const auto ti = CategoricalGrid({10, 10, 10}, 2, 1);
  auto c = tiny_config();
  c.epochs = 60;
  c.pairs_per_epoch = 16;
  const auto m = train(ti, c);
  CHECK(m.converged);
  CHECK(m.epochs_completed < 60);
}
