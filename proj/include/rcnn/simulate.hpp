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

// Sequential recursive simulation. Each domain D^1..D^N is filled along one
// shared random path: at every still-unknown node CNN_i predicts the inner
// pattern, the centre is always assigned, and each other unknown inner-pattern
// node is frozen with probability freeze_fraction.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rcnn/chain.hpp"
#include "rcnn/grid.hpp"
#include "rcnn/metrics.hpp"

namespace rcnn {

struct RandomPath {
  std::vector<std::size_t> order;
  std::uint64_t seed = 0;
};

/// Uniform permutation of all node indices.
RandomPath random_path(Dims3 dims, std::uint64_t seed);

/// Inverse-CDF draw from a probability vector; returns a 1-based category.
int draw_category(std::span<const double> probabilities, std::mt19937_64& rng);

struct SimulationOptions {
  double freeze_fraction = 0.5;
  AssignmentMode assignment = AssignmentMode::Draw;
};

struct DomainPassStats {
  std::size_t visits = 0;
  /// Unknown node count after each pass over the path; the last entry is 0.
  std::vector<std::size_t> unknown_after_pass;
};

/// Fills domains[chain_index] in place with CNN_{chain_index}, reading
/// domains[0..chain_index-1]. Nodes already informed are never overwritten.
DomainPassStats simulate_domain(const RCNNModel& model, int chain_index,
                                std::vector<CategoricalGrid>& domains, const RandomPath& path,
                                std::mt19937_64& rng, const SimulationOptions& options);

/// D^0..D^N from a migrated hard-data grid; every D^i starts as a copy of D^0.
std::vector<CategoricalGrid> simulate_chain(const RCNNModel& model, const CategoricalGrid& hard,
                                            const RandomPath& path, std::mt19937_64& rng,
                                            const SimulationOptions& options,
                                            std::vector<DomainPassStats>* stats = nullptr);

/// Seeds used inside one realization, derived from its seed.
std::uint64_t realization_path_seed(std::uint64_t seed);
std::uint64_t realization_draw_seed(std::uint64_t seed);

/// One realization (D^N) conditioned on `hard_data`.
CategoricalGrid simulate_realization(const RCNNModel& model, const DrillHoleSet& hard_data,
                                     Dims3 dims, std::uint64_t seed,
                                     const SimulationOptions& options);
CategoricalGrid simulate_realization(const RCNNModel& model, const DrillHoleSet& hard_data,
                                     Dims3 dims, std::uint64_t seed);

struct SimulationJob {
  const RCNNModel* model = nullptr;
  DrillHoleSet hard_data;
  Dims3 dims;
  int realizations = 1;
  std::uint64_t base_seed = 0;
  SimulationOptions options;
  int jobs = 1;
};

/// Realization r uses seed base_seed + r; output order follows r.
Ensemble run_ensemble(const SimulationJob& job);

}  // namespace rcnn
