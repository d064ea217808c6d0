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

#include "rcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace rcnn {

void Ensemble::validate() const {
  if (realizations.empty()) throw std::invalid_argument("empty ensemble");
  const auto& first = realizations.front();
  for (const auto& r : realizations) {
    if (!(r.dims() == first.dims()) || r.num_categories() != first.num_categories()) {
      throw std::invalid_argument("ensemble members differ in dimensions or categories");
    }
    if (!r.fully_informed()) throw std::invalid_argument("ensemble member has unknown nodes");
  }
}

std::string_view to_string(Direction d) {
  return d == Direction::Vertical ? "vertical" : "omni_horizontal";
}

double VariogramResult::sill() const {
  if (lags.empty()) throw std::logic_error("variogram has no lags");
  return lags.back().gamma;
}

double VariogramResult::at(int lag) const {
  for (const auto& l : lags)
    if (l.lag == lag) return l.gamma;
  throw std::out_of_range(fmt::format("lag {} not reported", lag));
}

int default_max_lag(const Dims3& dims, Direction direction) {
  return direction == Direction::Vertical ? dims.nz / 2 : std::min(dims.nx, dims.ny) / 2;
}

VariogramResult indicator_variogram(const CategoricalGrid& grid, int category, Direction direction,
                                    int max_lag) {
  if (!grid.fully_informed()) throw std::invalid_argument("variogram of a grid with unknown nodes");
  if (category < 1 || category > grid.num_categories()) {
    throw std::invalid_argument(fmt::format("category {} outside 1..{}", category,
                                            grid.num_categories()));
  }
  const int extent = direction == Direction::Vertical ? grid.nz() : std::max(grid.nx(), grid.ny());
  if (max_lag < 1 || max_lag >= extent) {
    throw std::invalid_argument(fmt::format("max lag {} outside [1, {})", max_lag, extent));
  }

  std::vector<std::uint8_t> ind(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ind[i] = grid[i] == category ? 1 : 0;

  std::vector<double> sum(max_lag + 1, 0.0);
  std::vector<std::size_t> count(max_lag + 1, 0);

  // Count mismatches along one separation vector; each unordered pair once.
  auto accumulate = [&](int dx, int dy, int dz, int bin) {
    const int x0 = std::max(0, -dx), x1 = std::min(grid.nx(), grid.nx() - dx);
    const int y0 = std::max(0, -dy), y1 = std::min(grid.ny(), grid.ny() - dy);
    const int z1 = grid.nz() - dz;
    if (x1 <= x0 || y1 <= y0 || z1 <= 0) return;
    std::size_t diff = 0;
    for (int z = 0; z < z1; ++z)
      for (int y = y0; y < y1; ++y) {
        const std::uint8_t* a = &ind[grid.index(0, y, z)];
        const std::uint8_t* b = &ind[grid.index(0, y + dy, z + dz)];
        for (int x = x0; x < x1; ++x) diff += a[x] ^ b[x + dx];
      }
    sum[bin] += static_cast<double>(diff);
    count[bin] += static_cast<std::size_t>(x1 - x0) * (y1 - y0) * z1;
  };

  if (direction == Direction::Vertical) {
    for (int h = 1; h <= max_lag; ++h) accumulate(0, 0, h, h);
  } else {
    for (int dy = 0; dy <= max_lag; ++dy)
      for (int dx = -max_lag; dx <= max_lag; ++dx) {
        if (dy == 0 && dx <= 0) continue;
        const auto bin = static_cast<int>(std::lround(std::hypot(dx, dy)));
        if (bin < 1 || bin > max_lag) continue;
        accumulate(dx, dy, 0, bin);
      }
  }

  VariogramResult result;
  result.direction = direction;
  for (int h = 1; h <= max_lag; ++h) {
    if (count[h] == 0) continue;
    result.lags.push_back({h, 0.5 * sum[h] / static_cast<double>(count[h]), count[h]});
  }
  return result;
}

std::vector<double> etype(const Ensemble& ensemble, int category) {
  ensemble.validate();
  const std::size_t n = ensemble.realizations.front().size();
  std::vector<double> p(n, 0.0);
  for (const auto& r : ensemble.realizations)
    for (std::size_t i = 0; i < n; ++i) p[i] += r[i] == category ? 1.0 : 0.0;
  const double m = static_cast<double>(ensemble.size());
  for (double& v : p) v /= m;
  return p;
}

std::vector<double> variance_map(const Ensemble& ensemble, int category) {
  auto p = etype(ensemble, category);
  for (double& v : p) v = v * (1.0 - v);
  return p;
}

std::vector<double> proportions(const CategoricalGrid& grid) {
  if (!grid.fully_informed()) throw std::invalid_argument("proportions of a grid with unknown nodes");
  std::vector<double> out(grid.num_categories(), 0.0);
  for (int v : grid.values()) out[v - 1] += 1.0;
  for (double& v : out) v /= static_cast<double>(grid.size());
  return out;
}

CategoricalGrid threshold_map(std::span<const double> probability, Dims3 dims, int category,
                              int other, double threshold) {
  if (probability.size() != dims.size()) throw std::invalid_argument("map size mismatch");
  std::vector<int> values(probability.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = probability[i] >= threshold ? category : other;
  }
  return CategoricalGrid(dims, std::max(category, other), std::move(values));
}

}  // namespace rcnn
