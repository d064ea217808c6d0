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

// The recursive CNN chain: CNN_i reads the search-grid windows of domains
// D^0..D^{i-1} and predicts the inner pattern of D^i.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcnn/grid.hpp"
#include "rcnn/nn/adam.hpp"
#include "rcnn/nn/network.hpp"

namespace rcnn {

/// How training hard data are drawn from the TI.
enum class HardDataLayout { Columns, Scattered };
/// How a category is picked from a node's softmax during simulation.
enum class AssignmentMode { Draw, Argmax };

struct RCNNConfig {
  int chain_length = 4;
  int num_categories = 2;
  WindowSpec window;

  std::vector<int> conv_channels{16, 16, 32, 32};
  std::vector<int> pool_layers{2, 4};
  int filter_size = 3;
  std::vector<int> hidden_widths{512, 256};
  nn::Activation activation = nn::Activation::ReLU;
  double bn_momentum = 0.99;

  double per_dc = 0.10;
  HardDataLayout hard_data_layout = HardDataLayout::Columns;
  int epochs = 40;
  int batch_size = 32;
  /// Leading path nodes used as training centres each epoch; 0 means all.
  std::size_t pairs_per_epoch = 0;
  double freeze_fraction = 0.5;
  AssignmentMode assignment = AssignmentMode::Draw;
  bool resimulate_each_epoch = true;
  bool early_stop = true;
  nn::AdamConfig adam;
  std::uint64_t seed = 2019;

  void validate() const;
  /// Architecture of CNN_i, i in 1..chain_length.
  nn::StackArchitecture architecture(int chain_index) const;
};

nlohmann::json to_json(const RCNNConfig& c);
RCNNConfig config_from_json(const nlohmann::json& j);

struct EpochLoss {
  int epoch = 0;
  int cnn_index = 0;
  double mean_loss = 0.0;
  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct RCNNModel {
  RCNNConfig config;
  std::vector<nn::CNNStack> chain;
  std::vector<nn::AdamState> optimizers;
  std::vector<EpochLoss> log;
  int epochs_completed = 0;
  bool converged = false;

  bool trained() const { return epochs_completed > 0; }
  /// Mean over chain members of the per-pair loss recorded for `epoch`.
  double chain_mean_loss(int epoch) const;
};

/// Fresh chain with parameters drawn from the config seed.
RCNNModel make_model(const RCNNConfig& config);

/// Concatenates one-hot SG windows of `domains` (D^0 first) at `center`.
nn::Tensor assemble_input(std::span<const CategoricalGrid> domains, Index3 center, Dims3 sg);

/// Sum over inner-pattern nodes of the cross entropy between the per-node
/// softmax of `scores` (K, ip) and the one-hot target. Target nodes carrying the
/// unknown code (outside the TI) are skipped.
double rcnn_loss(const nn::Tensor& scores, const CategoricalGrid& target);
/// Same loss; writes d(loss)/d(scores) into `grad` (reshaped to match scores).
double rcnn_loss_grad(const nn::Tensor& scores, const CategoricalGrid& target, nn::Tensor& grad);

struct TrainingPair {
  nn::Tensor input;
  CategoricalGrid target;
  Index3 center;
};

/// DB^i: one pair per path node. Inputs are materialized on demand from the
/// referenced domains, which must outlive the database.
class TrainingDatabase {
 public:
  TrainingDatabase(int chain_index, const CategoricalGrid& ti,
                   const std::vector<CategoricalGrid>& domains, std::vector<std::size_t> centers,
                   WindowSpec window);

  int chain_index() const { return chain_index_; }
  std::size_t size() const { return centers_.size(); }
  Index3 center(std::size_t k) const { return ti_->coords(centers_[k]); }
  nn::Tensor input(std::size_t k) const;
  CategoricalGrid target(std::size_t k) const;
  TrainingPair pair(std::size_t k) const { return {input(k), target(k), center(k)}; }

 private:
  int chain_index_;
  const CategoricalGrid* ti_;
  const std::vector<CategoricalGrid>* domains_;
  std::vector<std::size_t> centers_;
  WindowSpec window_;
};

/// DB^1..DB^N over the given path nodes; `domains` holds D^0..D^N.
std::vector<TrainingDatabase> build_databases(const CategoricalGrid& ti,
                                              const std::vector<CategoricalGrid>& domains,
                                              std::span<const std::size_t> path,
                                              const WindowSpec& window);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic, version, JSON metadata, then raw parameters, BN
/// running statistics and Adam moments.
void save_checkpoint(const RCNNModel& model, const std::filesystem::path& path);
RCNNModel load_checkpoint(const std::filesystem::path& path);

}  // namespace rcnn
