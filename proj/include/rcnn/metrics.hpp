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

// Two-point validation statistics over categorical grids and ensembles.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "rcnn/grid.hpp"

namespace rcnn {

struct Ensemble {
  std::vector<CategoricalGrid> realizations;

  /// Nonempty, shared dims and K, no unknown codes.
  void validate() const;
  std::size_t size() const { return realizations.size(); }
};

enum class Direction { OmniHorizontal, Vertical };
std::string_view to_string(Direction d);

struct VariogramLag {
  int lag = 0;
  double gamma = 0.0;
  std::size_t pairs = 0;
};

struct VariogramResult {
  Direction direction = Direction::Vertical;
  std::vector<VariogramLag> lags;

  /// Semivariance at the largest reported lag.
  double sill() const;
  /// Semivariance at `lag`; throws if that lag was not reported.
  double at(int lag) const;
};

/// Half the mean squared indicator difference per lag. Vertical uses pure z
/// offsets; omni-horizontal pools every (dx, dy, 0) whose Euclidean length
/// rounds to the lag. Lags without pairs are omitted.
VariogramResult indicator_variogram(const CategoricalGrid& grid, int category, Direction direction,
                                    int max_lag);
/// Half the relevant axis extent (the smaller of nx, ny for omni-horizontal).
int default_max_lag(const Dims3& dims, Direction direction);

/// Per-node ensemble frequency of `category`.
std::vector<double> etype(const Ensemble& ensemble, int category);
/// Per-node population variance of the indicator of `category`.
std::vector<double> variance_map(const Ensemble& ensemble, int category);
/// Fraction of nodes per category 1..K.
std::vector<double> proportions(const CategoricalGrid& grid);

/// Binary grid from a probability map: `category` where p >= threshold, the
/// other of two categories elsewhere.
CategoricalGrid threshold_map(std::span<const double> probability, Dims3 dims, int category,
                              int other, double threshold = 0.5);

}  // namespace rcnn
