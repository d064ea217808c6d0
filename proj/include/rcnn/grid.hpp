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

// Categorical 3D lattices, conditioning data and window extraction.
//
// Storage order is x-fastest, then y, then z (GSLIB convention). Code 0 is
// reserved for "unknown"; real categories are 1..K.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcnn/geometry.hpp"
#include "rcnn/nn/tensor.hpp"

namespace rcnn {

inline constexpr int kUnknown = 0;

class CategoricalGrid {
 public:
  CategoricalGrid() = default;
  /// Grid filled with `fill` (unknown by default).
  CategoricalGrid(Dims3 dims, int num_categories, int fill = kUnknown);
  CategoricalGrid(Dims3 dims, int num_categories, std::vector<int> values);

  const Dims3& dims() const { return dims_; }
  int nx() const { return dims_.nx; }
  int ny() const { return dims_.ny; }
  int nz() const { return dims_.nz; }
  int num_categories() const { return k_; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_.ny + y) * dims_.nx + x;
  }
  std::size_t index(const Index3& p) const { return index(p.x, p.y, p.z); }
  Index3 coords(std::size_t idx) const;
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  int at(int x, int y, int z) const { return values_[index(x, y, z)]; }
  int operator[](std::size_t i) const { return values_[i]; }
  void set(std::size_t i, int code);
  void set(int x, int y, int z, int code) { set(index(x, y, z), code); }

  std::span<const int> values() const { return values_; }
  std::size_t count(int code) const;
  bool fully_informed() const { return count(kUnknown) == 0; }

  friend bool operator==(const CategoricalGrid&, const CategoricalGrid&) = default;

 private:
  Dims3 dims_;
  int k_ = 0;
  std::vector<int> values_;
};

/// One conditioning sample, positioned in node units (node centers sit on integers).
struct HardDatum {
  double x = 0, y = 0, z = 0;
  int category = 0;
};

struct DrillHoleSet {
  std::vector<HardDatum> samples;
  double source_fraction = 0.0;
};

/// Search grid (SG) and inner pattern (IP) dimensions; both odd and co-centered.
struct WindowSpec {
  Dims3 sg{15, 15, 15};
  Dims3 ip{5, 5, 5};
  void validate() const;
};

/// Raised for malformed grid or drill-hole files; carries the 1-based line number.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

CategoricalGrid load_grid(const std::filesystem::path& path, Dims3 dims, int num_categories);
void save_grid(const CategoricalGrid& grid, const std::filesystem::path& path,
               const std::string& title = "rcnn-mps grid");
/// Real-valued map in the same layout (one value per line, x-fastest).
void save_real_map(std::span<const double> values, const std::filesystem::path& path,
                   const std::string& title, const std::string& variable);
std::vector<double> load_real_map(const std::filesystem::path& path, Dims3 dims);

struct MigrationResult {
  CategoricalGrid grid;
  std::size_t conflicts = 0;
  std::size_t assigned_nodes = 0;
};

/// Nearest node to a sample position, clamped to the grid. Exact halves round down.
Index3 nearest_node(const Dims3& dims, double x, double y, double z);

/// Moves every sample to its nearest node. When several samples land on the same
/// node the first one in list order wins and the clash is counted.
MigrationResult migrate_hard_data(const CategoricalGrid& grid, const DrillHoleSet& holes);

/// Window of `dims` centred at `center`; positions outside the grid are unknown.
CategoricalGrid extract_window(const CategoricalGrid& grid, Index3 center, Dims3 dims);

/// K+1 channel indicator encoding; channel 0 flags unknown.
nn::Tensor one_hot_encode(const CategoricalGrid& window, int num_categories);

/// Fused extract_window + one_hot_encode writing channels
/// [channel_offset, channel_offset + K] of `out`, which must already have the
/// window's spatial extents.
void encode_window_into(const CategoricalGrid& grid, Index3 center, nn::Tensor& out,
                        int channel_offset);

/// Vertical drill holes: whole (x, y) columns drawn without replacement until the
/// sampled node count first reaches fraction * grid size.
DrillHoleSet sample_drillholes(const CategoricalGrid& ti, double fraction, std::uint64_t seed);

/// Scattered single nodes drawn without replacement, ceil(fraction * size) of them.
DrillHoleSet sample_scattered(const CategoricalGrid& ti, double fraction, std::uint64_t seed);

void save_drillholes_csv(const DrillHoleSet& holes, const std::filesystem::path& path);
DrillHoleSet load_drillholes_csv(const std::filesystem::path& path, int num_categories);

/// Sub-block [origin, origin + dims) of a grid.
CategoricalGrid crop(const CategoricalGrid& grid, Index3 origin, Dims3 dims);

}  // namespace rcnn
