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

// Synthetic binary layered model: stacked undulating surfaces, alternate
// intervals carry category 2.

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "rcnn/grid.hpp"

namespace rcnn {

/// Minority proportion whose indicator variance p(1 - p) is 0.18.
inline constexpr double kDeskMinorityProportion = 0.23542486889354095;

struct SurfaceModelParams {
  Dims3 dims{100, 100, 50};
  int n_surfaces = 6;
  int min_cosines = 3;
  int max_cosines = 6;
  /// Per-cosine amplitude range in nodes, divided by the surface's cosine count.
  double min_amplitude = 2.0;
  double max_amplitude = 6.0;
  /// Wavelength range as fractions of nx.
  double min_wavelength = 0.25;
  double max_wavelength = 1.0;
  /// Unset keeps the raw surface geometry (offset 0).
  std::optional<double> target_proportion = kDeskMinorityProportion;
  double proportion_min = 0.20;
  double proportion_max = 0.28;
  std::uint64_t seed = 2019;

  void validate() const;
};

/// Thrown when the offset search cannot reach the proportion range.
class ProportionError : public std::runtime_error {
 public:
  ProportionError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

struct SurfaceModel {
  CategoricalGrid grid;
  /// Extension added to the top of every category-2 interval.
  double offset = 0.0;
  double minority_proportion = 0.0;
};

SurfaceModel build_surface_model(const SurfaceModelParams& params);
CategoricalGrid generate_surface_model(const SurfaceModelParams& params);

struct Sectors {
  CategoricalGrid ti, s1, s2, s3;
};

/// Quadrants of a field with even nx, ny: TI (low x, low y), S1 (high x),
/// S2 (high y), S3 (high x, high y), each spanning the full height.
Sectors split_sectors(const CategoricalGrid& field);

}  // namespace rcnn
