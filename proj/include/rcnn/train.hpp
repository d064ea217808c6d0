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

#include <functional>

#include "rcnn/chain.hpp"
#include "rcnn/grid.hpp"

namespace rcnn {

struct TrainHooks {
  /// Called after every completed epoch with the updated model.
  std::function<void(const RCNNModel&)> on_epoch;
};

/// Conditioning data planted in every training domain; drawn once per run
/// from the config seed.
DrillHoleSet training_hard_data(const CategoricalGrid& ti, const RCNNConfig& config);

/// Fresh chain trained on `ti` for config.epochs epochs or until early stop.
RCNNModel train(const CategoricalGrid& ti, const RCNNConfig& config, const TrainHooks& hooks = {});

/// Continues `model` from model.epochs_completed up to config.epochs. The
/// trajectory matches an uninterrupted run with the same config.
void resume_training(RCNNModel& model, const CategoricalGrid& ti, const TrainHooks& hooks = {});

/// One epoch: re-simulate D^1..D^N, rebuild DB^1..DB^N, one Adam pass over
/// each CNN in chain order. Returns the mean per-pair loss of each CNN.
std::vector<double> run_epoch(RCNNModel& model, const CategoricalGrid& ti, int epoch);

/// True once the 0.9 EMA of the chain loss improved by less than 0.1% over
/// the last five epochs.
bool early_stop_reached(const RCNNModel& model);

}  // namespace rcnn
