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

// Layer primitives with hand-derived gradients. Backward functions accumulate
// parameter gradients into the layer's grad buffers and return the gradient
// with respect to the layer input.

#include <cstdint>
#include <string_view>
#include <vector>

#include "rcnn/nn/tensor.hpp"

namespace rcnn::nn {

enum class Mode { Train, Infer };

enum class Activation { ReLU, Sigmoid, TanH, Identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

double activate(Activation a, double x);
/// Derivative at the pre-activation value `x`; ReLU uses 0 at the kink.
double activation_derivative(Activation a, double x);

Tensor activation_forward(const Tensor& x, Activation a);
Tensor activation_backward(const Tensor& grad_out, const Tensor& x, Activation a);

/// Same-padded, stride-1 3D convolution. Weights are laid out
/// [out][in][fz][fy][fx].
struct ConvLayer {
  int in_channels = 0, out_channels = 0;
  int fx = 1, fy = 1, fz = 1;
  std::vector<double> weights, bias;
  std::vector<double> grad_weights, grad_bias;

  ConvLayer() = default;
  ConvLayer(int in, int out, int fx, int fy, int fz);

  std::size_t weight_index(int o, int i, int kx, int ky, int kz) const {
    return ((((static_cast<std::size_t>(o) * in_channels + i) * fz + kz) * fy + ky) * fx) + kx;
  }
  double& weight(int o, int i, int kx, int ky, int kz) { return weights[weight_index(o, i, kx, ky, kz)]; }
  double weight(int o, int i, int kx, int ky, int kz) const {
    return weights[weight_index(o, i, kx, ky, kz)];
  }
  int fan_in() const { return in_channels * fx * fy * fz; }
};

Tensor conv3d_forward(const Tensor& input, const ConvLayer& layer);
Tensor conv3d_backward(const Tensor& grad_out, const Tensor& input, ConvLayer& layer);

/// Per-feature-map batch normalization. A feature map is one channel of a
/// Tensor; statistics pool over batch members and spatial positions.
struct BatchNorm {
  int features = 0;
  double momentum = 0.99;
  double epsilon = 1e-5;
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  std::vector<double> grad_gamma, grad_beta;

  BatchNorm() = default;
  explicit BatchNorm(int features, double momentum = 0.99, double epsilon = 1e-5);
};

struct BatchNormCache {
  std::vector<Tensor> normalized;
  std::vector<double> inv_std;
};

/// Train mode normalizes with batch statistics and updates the running
/// averages; infer mode reads the running averages only.
std::vector<Tensor> batchnorm_forward(const std::vector<Tensor>& batch, BatchNorm& bn, Mode mode,
                                      BatchNormCache* cache = nullptr);
Tensor batchnorm_infer(const Tensor& x, const BatchNorm& bn);
std::vector<Tensor> batchnorm_backward(const std::vector<Tensor>& grad_out,
                                       const BatchNormCache& cache, BatchNorm& bn);

/// (2,2,2) windows with stride 2; odd extents pool a partial last window.
struct PoolCache {
  int channels = 0, dx = 0, dy = 0, dz = 0;
  std::vector<std::uint32_t> argmax;
};

Tensor maxpool_forward(const Tensor& input, PoolCache* cache = nullptr);
Tensor maxpool_backward(const Tensor& grad_out, const PoolCache& cache);

/// Dense layer; weights row-major (n_out x n_in). Inputs of any shape are read
/// flat in storage order, outputs are (n_out, 1, 1, 1).
struct FCLayer {
  int n_in = 0, n_out = 0;
  std::vector<double> weights, bias;
  std::vector<double> grad_weights, grad_bias;

  FCLayer() = default;
  FCLayer(int n_in, int n_out);
};

Tensor fc_forward(const Tensor& input, const FCLayer& layer);
Tensor fc_backward(const Tensor& grad_out, const Tensor& input, FCLayer& layer);

}  // namespace rcnn::nn
