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

// One CNN of the chain: M convolution blocks (conv -> BN -> activation ->
// optional 2x2x2 max pooling) followed by F dense blocks (dense -> BN ->
// activation). The last dense block emits one score per inner-pattern node and
// category and uses the identity activation, the softmax being applied per node
// by the caller.

#include <cstdint>
#include <vector>

#include "rcnn/geometry.hpp"
#include "rcnn/nn/adam.hpp"
#include "rcnn/nn/layers.hpp"
#include "rcnn/nn/tensor.hpp"

namespace rcnn::nn {

struct StackArchitecture {
  Dims3 input_dims{15, 15, 15};
  int input_channels = 3;
  Dims3 output_dims{5, 5, 5};
  int num_categories = 2;
  std::vector<int> conv_channels{16, 16, 32, 32};
  /// 1-based indices of conv blocks followed by max pooling.
  std::vector<int> pool_layers{2, 4};
  int filter_size = 3;
  /// Hidden dense widths; the output layer (ip * K) is appended.
  std::vector<int> hidden_widths{512, 256};
  Activation activation = Activation::ReLU;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;

  void validate() const;
  Dims3 feature_dims() const;
  std::size_t flattened_size() const;
  std::size_t output_size() const { return output_dims.size() * num_categories; }
};

struct ConvBlock {
  ConvLayer conv;
  BatchNorm bn;
  bool pool = false;
};

struct DenseBlock {
  FCLayer fc;
  BatchNorm bn;
  Activation activation = Activation::ReLU;
};

/// Activations retained by a train-mode forward pass for the backward pass.
struct ForwardCache {
  struct ConvEntry {
    std::vector<Tensor> input, pre_activation;
    BatchNormCache bn;
    std::vector<PoolCache> pool;
  };
  struct DenseEntry {
    std::vector<Tensor> input, pre_activation;
    BatchNormCache bn;
  };
  std::vector<ConvEntry> conv;
  std::vector<DenseEntry> dense;
  Tensor feature_shape;
};

/// Non-trainable state that still has to be checkpointed (BN running stats).
struct BufferView {
  std::span<double> value;
};

class CNNStack {
 public:
  CNNStack() = default;
  explicit CNNStack(StackArchitecture arch);

  const StackArchitecture& architecture() const { return arch_; }

  /// Weights ~ N(0, 2 / fan_in) truncated at two standard deviations (redrawn
  /// outside), zero biases, unit gamma, zero beta.
  void init_parameters(std::uint64_t seed);

  /// Inference-mode forward of one input; returns scores shaped (K, ip_x, ip_y, ip_z).
  Tensor forward(const Tensor& input) const;
  /// Batched forward. Train mode updates BN running statistics and fills `cache`.
  std::vector<Tensor> forward(const std::vector<Tensor>& batch, Mode mode,
                              ForwardCache* cache = nullptr);
  /// Accumulates parameter gradients given d(loss)/d(scores) per batch member.
  void backward(const std::vector<Tensor>& grad_scores, const ForwardCache& cache);

  void zero_grad();
  std::vector<ParamView> parameters();
  std::vector<BufferView> buffers();
  /// Read-only views in the same order as parameters() / buffers().
  std::vector<std::span<const double>> parameter_values() const;
  std::vector<std::span<const double>> buffer_values() const;
  std::size_t parameter_count() const;

  std::vector<ConvBlock>& conv_blocks() { return conv_; }
  std::vector<DenseBlock>& dense_blocks() { return dense_; }
  const std::vector<ConvBlock>& conv_blocks() const { return conv_; }
  const std::vector<DenseBlock>& dense_blocks() const { return dense_; }

 private:
  void check_input(const Tensor& t) const;

  StackArchitecture arch_;
  std::vector<ConvBlock> conv_;
  std::vector<DenseBlock> dense_;
};

}  // namespace rcnn::nn
