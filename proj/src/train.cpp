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

#include "rcnn/train.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "rcnn/seed.hpp"
#include "rcnn/simulate.hpp"

namespace rcnn {

namespace {

constexpr double kEmaFactor = 0.9;
constexpr int kStopWindow = 5;
constexpr double kStopImprovement = 1e-3;
constexpr int kStallWarning = 10;

void check_ti(const CategoricalGrid& ti, const RCNNConfig& config) {
  if (!ti.fully_informed()) throw std::invalid_argument("training image must be fully informed");
  if (ti.num_categories() != config.num_categories) {
    throw std::invalid_argument("training image category count differs from config");
  }
  const Dims3 sg = config.window.sg;
  if (ti.nx() < sg.nx || ti.ny() < sg.ny || ti.nz() < sg.nz) {
    throw std::invalid_argument("training image " + to_string(ti.dims()) +
                                " smaller than search grid " + to_string(sg));
  }
}

std::vector<double> chain_losses(const RCNNModel& model) {
  std::vector<double> out;
  for (int e = 1; e <= model.epochs_completed; ++e) out.push_back(model.chain_mean_loss(e));
  return out;
}

std::vector<double> ema(const std::vector<double>& xs) {
  std::vector<double> out;
  for (double x : xs) out.push_back(out.empty() ? x : kEmaFactor * out.back() + (1 - kEmaFactor) * x);
  return out;
}

// Mini-batch boundaries; a trailing single pair joins the previous batch so
// train-mode batch statistics stay defined.
std::vector<std::pair<std::size_t, std::size_t>> batches(std::size_t n, std::size_t m) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += m) out.emplace_back(b, std::min(n, b + m));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

double train_member(nn::CNNStack& stack, nn::AdamState& opt, const TrainingDatabase& db,
                    std::size_t batch_size) {
  double total = 0.0;
  std::vector<nn::Tensor> inputs, grads;
  std::vector<CategoricalGrid> targets;
  for (auto [begin, end] : batches(db.size(), batch_size)) {
    const std::size_t m = end - begin;
    inputs.clear();
    targets.clear();
    for (std::size_t k = begin; k < end; ++k) {
      inputs.push_back(db.input(k));
      targets.push_back(db.target(k));
    }
    nn::ForwardCache cache;
    stack.zero_grad();
    const auto scores = stack.forward(inputs, nn::Mode::Train, &cache);
    grads.assign(m, nn::Tensor{});
    for (std::size_t s = 0; s < m; ++s) {
      total += rcnn_loss_grad(scores[s], targets[s], grads[s]);
      for (std::size_t j = 0; j < grads[s].size(); ++j) grads[s][j] /= static_cast<double>(m);
    }
    stack.backward(grads, cache);
    const auto params = stack.parameters();
    nn::adam_step(params, opt);
  }
  return total / static_cast<double>(db.size());
}

}  // namespace

DrillHoleSet training_hard_data(const CategoricalGrid& ti, const RCNNConfig& config) {
  const auto seed = derive_seed(config.seed, "train-hard-data");
  return config.hard_data_layout == HardDataLayout::Columns
             ? sample_drillholes(ti, config.per_dc, seed)
             : sample_scattered(ti, config.per_dc, seed);
}

std::vector<double> run_epoch(RCNNModel& model, const CategoricalGrid& ti, int epoch) {
  const auto& config = model.config;
  check_ti(ti, config);
  const auto hard = migrate_hard_data(CategoricalGrid(ti.dims(), ti.num_categories()),
                                      training_hard_data(ti, config))
                        .grid;
  const SimulationOptions options{config.freeze_fraction, config.assignment};

  // Fixed-once mode replays the first epoch's simulation with initial weights.
  const int sim_epoch = config.resimulate_each_epoch ? epoch : 1;
  const auto sim_path = random_path(ti.dims(), derive_seed(config.seed, "train-path", sim_epoch));
  std::mt19937_64 rng(derive_seed(config.seed, "train-sim", sim_epoch));
  const auto domains = config.resimulate_each_epoch
                           ? simulate_chain(model, hard, sim_path, rng, options)
                           : simulate_chain(make_model(config), hard, sim_path, rng, options);

  const auto path = random_path(ti.dims(), derive_seed(config.seed, "train-path", epoch));
  std::size_t n_pairs = path.order.size();
  if (config.pairs_per_epoch > 0) n_pairs = std::min(n_pairs, config.pairs_per_epoch);
  const auto dbs = build_databases(
      ti, domains, std::span<const std::size_t>(path.order.data(), n_pairs), config.window);

  std::vector<double> losses;
  for (int i = 1; i <= config.chain_length; ++i) {
    const double loss = train_member(model.chain[i - 1], model.optimizers[i - 1], dbs[i - 1],
                                     static_cast<std::size_t>(config.batch_size));
    model.log.push_back({epoch, i, loss});
    losses.push_back(loss);
    spdlog::debug("epoch {} CNN_{} mean loss {:.6f}", epoch, i, loss);
  }
  model.epochs_completed = epoch;
  return losses;
}

bool early_stop_reached(const RCNNModel& model) {
  const auto smoothed = ema(chain_losses(model));
  if (static_cast<int>(smoothed.size()) <= kStopWindow) return false;
  const double now = smoothed.back();
  const double before = smoothed[smoothed.size() - 1 - kStopWindow];
  return before - now < kStopImprovement * std::abs(before);
}

void resume_training(RCNNModel& model, const CategoricalGrid& ti, const TrainHooks& hooks) {
  model.config.validate();
  check_ti(ti, model.config);
  if (model.converged) return;
  while (model.epochs_completed < model.config.epochs) {
    const int epoch = model.epochs_completed + 1;
    run_epoch(model, ti, epoch);
    spdlog::info("epoch {}/{} chain loss {:.6f}", epoch, model.config.epochs,
                 model.chain_mean_loss(epoch));

    const auto losses = chain_losses(model);
    if (losses.size() > static_cast<std::size_t>(kStallWarning)) {
      bool stalled = true;
      for (std::size_t e = losses.size() - kStallWarning; e < losses.size(); ++e) {
        stalled = stalled && losses[e] >= losses[e - 1];
      }
      if (stalled) spdlog::warn("chain loss has not decreased for {} epochs", kStallWarning);
    }
    if (model.config.early_stop && early_stop_reached(model)) model.converged = true;
    if (hooks.on_epoch) hooks.on_epoch(model);
    if (model.converged) {
      spdlog::info("early stop after epoch {}", epoch);
      break;
    }
  }
}

RCNNModel train(const CategoricalGrid& ti, const RCNNConfig& config, const TrainHooks& hooks) {
  auto model = make_model(config);
  resume_training(model, ti, hooks);
  return model;
}

}  // namespace rcnn
