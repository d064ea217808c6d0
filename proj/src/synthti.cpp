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

#include "rcnn/synthti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace rcnn {

namespace {

constexpr int kSearchIterations = 100;

struct Cosine {
  double amplitude, kx, ky, phase;
};

// Sorted surface elevations per (x, y) column, surfaces fastest.
std::vector<double> surface_stack(const SurfaceModelParams& p) {
  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<int> count(p.min_cosines, p.max_cosines);
  std::uniform_real_distribution<double> amp(p.min_amplitude, p.max_amplitude);
  std::uniform_real_distribution<double> wave(p.min_wavelength * p.dims.nx,
                                              p.max_wavelength * p.dims.nx);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  const int n = p.n_surfaces;
  std::vector<std::vector<Cosine>> surfaces(n);
  for (auto& s : surfaces) {
    const int c = count(rng);
    for (int k = 0; k < c; ++k) {
      const double a = amp(rng) / c;
      const double w = 2.0 * std::numbers::pi / wave(rng);
      const double theta = angle(rng);
      s.push_back({a, w * std::cos(theta), w * std::sin(theta), angle(rng)});
    }
  }

  const int nx = p.dims.nx, ny = p.dims.ny;
  std::vector<double> z(static_cast<std::size_t>(nx) * ny * n);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double* col = &z[(static_cast<std::size_t>(y) * nx + x) * n];
      for (int j = 0; j < n; ++j) {
        double h = p.dims.nz * (j + 0.5) / n;
        for (const auto& c : surfaces[j]) h += c.amplitude * std::cos(c.kx * x + c.ky * y + c.phase);
        col[j] = std::clamp(h, 0.0, static_cast<double>(p.dims.nz));
      }
      std::sort(col, col + n);
    }
  return z;
}

CategoricalGrid rasterize(const SurfaceModelParams& p, const std::vector<double>& z, double offset) {
  CategoricalGrid g(p.dims, 2, 1);
  const int n = p.n_surfaces;
  for (int y = 0; y < p.dims.ny; ++y)
    for (int x = 0; x < p.dims.nx; ++x) {
      const double* col = &z[(static_cast<std::size_t>(y) * p.dims.nx + x) * n];
      // Intervals [col[j], col[j+1]) with j even, the last one open to the top.
      for (int j = 0; j < n; j += 2) {
        const double lo = col[j];
        const double hi = (j + 1 < n ? col[j + 1] : static_cast<double>(p.dims.nz)) + offset;
        for (int k = std::max(0, static_cast<int>(std::ceil(lo))); k < p.dims.nz && k < hi; ++k) {
          g.set(x, y, k, 2);
        }
      }
    }
  return g;
}

double minority(const CategoricalGrid& g) {
  return static_cast<double>(g.count(2)) / static_cast<double>(g.size());
}

}  // namespace

void SurfaceModelParams::validate() const {
  if (!dims.positive()) throw std::invalid_argument("surface model needs positive dimensions");
  if (n_surfaces < 1) throw std::invalid_argument("need at least one surface");
  if (min_cosines < 0 || max_cosines < min_cosines) throw std::invalid_argument("bad cosine count range");
  if (min_amplitude < 0 || max_amplitude < min_amplitude) throw std::invalid_argument("bad amplitude range");
  if (min_wavelength <= 0 || max_wavelength < min_wavelength) {
    throw std::invalid_argument("bad wavelength range");
  }
  if (target_proportion && !(*target_proportion > 0.0 && *target_proportion < 1.0)) {
    throw std::invalid_argument("proportion target outside (0, 1)");
  }
  if (!(proportion_min <= proportion_max)) throw std::invalid_argument("bad proportion range");
}

SurfaceModel build_surface_model(const SurfaceModelParams& params) {
  params.validate();
  const auto z = surface_stack(params);
  SurfaceModel model;
  if (!params.target_proportion) {
    model.grid = rasterize(params, z, 0.0);
    model.minority_proportion = minority(model.grid);
    return model;
  }

  // Proportion is non-decreasing in the offset.
  const double target = *params.target_proportion;
  double lo = -static_cast<double>(params.dims.nz), hi = static_cast<double>(params.dims.nz);
  double best_offset = 0.0, best_p = -1.0;
  for (int it = 0; it < kSearchIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = minority(rasterize(params, z, mid));
    if (best_p < 0 || std::abs(p - target) < std::abs(best_p - target)) {
      best_offset = mid;
      best_p = p;
    }
    if (p < target) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-9) break;
  }
  if (best_p < params.proportion_min || best_p > params.proportion_max) {
    throw ProportionError(fmt::format("minority proportion target {:.4f} infeasible; achieved {:.4f}",
                                      target, best_p),
                          best_p);
  }
  model.offset = best_offset;
  model.grid = rasterize(params, z, best_offset);
  model.minority_proportion = best_p;
  return model;
}

CategoricalGrid generate_surface_model(const SurfaceModelParams& params) {
  return build_surface_model(params).grid;
}

Sectors split_sectors(const CategoricalGrid& field) {
  if (field.nx() < 2 || field.ny() < 2 || field.nx() % 2 != 0 || field.ny() % 2 != 0) {
    throw std::invalid_argument("sector split needs even nx and ny, got " + to_string(field.dims()));
  }
  const int hx = field.nx() / 2, hy = field.ny() / 2;
  const Dims3 d{hx, hy, field.nz()};
  return {crop(field, {0, 0, 0}, d), crop(field, {hx, 0, 0}, d), crop(field, {0, hy, 0}, d),
          crop(field, {hx, hy, 0}, d)};
}

}  // namespace rcnn
