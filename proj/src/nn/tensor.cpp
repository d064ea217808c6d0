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

#include "rcnn/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace rcnn::nn {

Tensor::Tensor(int channels, int dx, int dy, int dz, double fill)
    : c_(channels), dx_(dx), dy_(dy), dz_(dz) {
  if (channels <= 0 || dx <= 0 || dy <= 0 || dz <= 0) {
    throw std::invalid_argument(
        fmt::format("tensor extents must be positive, got {}x{}x{}x{}", channels, dx, dy, dz));
  }
  data_.assign(static_cast<std::size_t>(channels) * dx * dy * dz, fill);
}

std::string Tensor::shape_string() const { return fmt::format("({}, {}, {}, {})", c_, dx_, dy_, dz_); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace rcnn::nn
