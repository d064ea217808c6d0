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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rcnn::nn {

/// Dense rank-4 block: channels x (dx, dy, dz), x fastest, channel slowest.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int dx, int dy, int dz, double fill = 0.0);

  int channels() const { return c_; }
  int dx() const { return dx_; }
  int dy() const { return dy_; }
  int dz() const { return dz_; }
  std::size_t spatial_size() const { return static_cast<std::size_t>(dx_) * dy_ * dz_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& other) const {
    return c_ == other.c_ && dx_ == other.dx_ && dy_ == other.dy_ && dz_ == other.dz_;
  }
  std::string shape_string() const;

  std::size_t index(int c, int x, int y, int z) const {
    return ((static_cast<std::size_t>(c) * dz_ + z) * dy_ + y) * dx_ + x;
  }
  double& at(int c, int x, int y, int z) { return data_[index(c, x, y, z)]; }
  const double& at(int c, int x, int y, int z) const { return data_[index(c, x, y, z)]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> channel(int c) { return {data_.data() + c * spatial_size(), spatial_size()}; }
  std::span<const double> channel(int c) const {
    return {data_.data() + c * spatial_size(), spatial_size()};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  int c_ = 0, dx_ = 0, dy_ = 0, dz_ = 0;
  std::vector<double> data_;
};

}  // namespace rcnn::nn
