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

#include "rcnn/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace rcnn::nn {

void StackArchitecture::validate() const {
  if (!input_dims.positive() || !output_dims.positive()) {
    throw std::invalid_argument("stack input and output extents must be positive");
  }
  if (input_channels <= 0 || num_categories <= 0) {
    throw std::invalid_argument("stack needs positive channel and category counts");
  }
  if (conv_channels.empty()) throw std::invalid_argument("stack needs at least one conv block");
  if (filter_size <= 0 || filter_size % 2 == 0) throw std::invalid_argument("filter size must be odd");
  for (int c : conv_channels)
    if (c <= 0) throw std::invalid_argument("conv channel counts must be positive");
  for (int p : pool_layers) {
    if (p < 1 || p > static_cast<int>(conv_channels.size())) {
      throw std::invalid_argument(fmt::format("pooling after conv block {} but only {} blocks", p,
                                              conv_channels.size()));
    }
  }
  for (int w : hidden_widths)
    if (w <= 0) throw std::invalid_argument("dense widths must be positive");
}

Dims3 StackArchitecture::feature_dims() const {
  Dims3 d = input_dims;
  for (int m = 1; m <= static_cast<int>(conv_channels.size()); ++m) {
    if (std::find(pool_layers.begin(), pool_layers.end(), m) != pool_layers.end()) {
      d = {(d.nx + 1) / 2, (d.ny + 1) / 2, (d.nz + 1) / 2};
    }
  }
  return d;
}

std::size_t StackArchitecture::flattened_size() const {
  return feature_dims().size() * static_cast<std::size_t>(conv_channels.back());
}

CNNStack::CNNStack(StackArchitecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  int in = arch_.input_channels;
  for (std::size_t m = 0; m < arch_.conv_channels.size(); ++m) {
    ConvBlock b;
    const int out = arch_.conv_channels[m];
    b.conv = ConvLayer(in, out, arch_.filter_size, arch_.filter_size, arch_.filter_size);
    b.bn = BatchNorm(out, arch_.bn_momentum, arch_.bn_epsilon);
    b.pool = std::find(arch_.pool_layers.begin(), arch_.pool_layers.end(),
                       static_cast<int>(m) + 1) != arch_.pool_layers.end();
    conv_.push_back(std::move(b));
    in = out;
  }
  std::vector<int> widths = arch_.hidden_widths;
  widths.push_back(static_cast<int>(arch_.output_size()));
  int n_in = static_cast<int>(arch_.flattened_size());
  for (std::size_t f = 0; f < widths.size(); ++f) {
    DenseBlock b;
    b.fc = FCLayer(n_in, widths[f]);
    b.bn = BatchNorm(widths[f], arch_.bn_momentum, arch_.bn_epsilon);
    b.activation = f + 1 == widths.size() ? Activation::Identity : arch_.activation;
    dense_.push_back(std::move(b));
    n_in = widths[f];
  }
}

void CNNStack::init_parameters(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](std::vector<double>& w, int fan_in) {
    const double sd = std::sqrt(2.0 / fan_in);
    for (double& v : w) {
      double z = normal(rng);
      while (std::abs(z) > 2.0) z = normal(rng);
      v = z * sd;
    }
  };
  auto reset_bn = [](BatchNorm& bn) { bn = BatchNorm(bn.features, bn.momentum, bn.epsilon); };
  for (auto& b : conv_) {
    fill(b.conv.weights, b.conv.fan_in());
    std::fill(b.conv.bias.begin(), b.conv.bias.end(), 0.0);
    reset_bn(b.bn);
  }
  for (auto& b : dense_) {
    fill(b.fc.weights, b.fc.n_in);
    std::fill(b.fc.bias.begin(), b.fc.bias.end(), 0.0);
    reset_bn(b.bn);
  }
  zero_grad();
}

void CNNStack::check_input(const Tensor& t) const {
  if (t.channels() != arch_.input_channels || t.dx() != arch_.input_dims.nx ||
      t.dy() != arch_.input_dims.ny || t.dz() != arch_.input_dims.nz) {
    throw std::invalid_argument(fmt::format("layer 0: input {} does not match expected ({}, {})",
                                            t.shape_string(), arch_.input_channels,
                                            to_string(arch_.input_dims)));
  }
}

namespace {

Tensor reshape(const Tensor& t, int c, int dx, int dy, int dz) {
  Tensor out(c, dx, dy, dz);
  if (out.size() != t.size()) throw std::logic_error("reshape size mismatch");
  std::copy(t.data().begin(), t.data().end(), out.data().begin());
  return out;
}

}  // namespace

Tensor CNNStack::forward(const Tensor& input) const {
  check_input(input);
  Tensor h = input;
  for (std::size_t m = 0; m < conv_.size(); ++m) {
    const auto& b = conv_[m];
    h = conv3d_forward(h, b.conv);
    h = batchnorm_infer(h, b.bn);
    h = activation_forward(h, arch_.activation);
    if (b.pool) h = maxpool_forward(h);
  }
  for (const auto& b : dense_) {
    h = fc_forward(h, b.fc);
    h = batchnorm_infer(h, b.bn);
    h = activation_forward(h, b.activation);
  }
  const auto& ip = arch_.output_dims;
  return reshape(h, arch_.num_categories, ip.nx, ip.ny, ip.nz);
}

std::vector<Tensor> CNNStack::forward(const std::vector<Tensor>& batch, Mode mode,
                                      ForwardCache* cache) {
  if (batch.empty()) throw std::invalid_argument("forward on an empty batch");
  for (const auto& t : batch) check_input(t);
  if (cache) {
    cache->conv.assign(conv_.size(), {});
    cache->dense.assign(dense_.size(), {});
  }

  std::vector<Tensor> h = batch;
  for (std::size_t m = 0; m < conv_.size(); ++m) {
    auto& b = conv_[m];
    std::vector<Tensor> z;
    z.reserve(h.size());
    for (const auto& t : h) z.push_back(conv3d_forward(t, b.conv));
    auto* entry = cache ? &cache->conv[m] : nullptr;
    if (entry) entry->input = std::move(h);
    z = batchnorm_forward(z, b.bn, mode, entry ? &entry->bn : nullptr);
    h.clear();
    for (const auto& t : z) h.push_back(activation_forward(t, arch_.activation));
    if (entry) entry->pre_activation = std::move(z);
    if (b.pool) {
      if (entry) entry->pool.resize(h.size());
      for (std::size_t s = 0; s < h.size(); ++s) {
        h[s] = maxpool_forward(h[s], entry ? &entry->pool[s] : nullptr);
      }
    }
  }
  if (cache) cache->feature_shape = Tensor(h.front().channels(), h.front().dx(), h.front().dy(),
                                           h.front().dz());

  for (std::size_t f = 0; f < dense_.size(); ++f) {
    auto& b = dense_[f];
    std::vector<Tensor> z;
    z.reserve(h.size());
    for (const auto& t : h) z.push_back(fc_forward(t, b.fc));
    auto* entry = cache ? &cache->dense[f] : nullptr;
    if (entry) entry->input = std::move(h);
    z = batchnorm_forward(z, b.bn, mode, entry ? &entry->bn : nullptr);
    h.clear();
    for (const auto& t : z) h.push_back(activation_forward(t, b.activation));
    if (entry) entry->pre_activation = std::move(z);
  }

  const auto& ip = arch_.output_dims;
  for (auto& t : h) t = reshape(t, arch_.num_categories, ip.nx, ip.ny, ip.nz);
  return h;
}

void CNNStack::backward(const std::vector<Tensor>& grad_scores, const ForwardCache& cache) {
  if (cache.dense.size() != dense_.size() || cache.conv.size() != conv_.size()) {
    throw std::invalid_argument("backward without a matching train-mode forward cache");
  }
  std::vector<Tensor> g;
  g.reserve(grad_scores.size());
  for (const auto& t : grad_scores) {
    if (t.size() != arch_.output_size()) {
      throw std::invalid_argument(fmt::format("layer {}: score gradient has {} entries, expected {}",
                                              conv_.size() + dense_.size(), t.size(),
                                              arch_.output_size()));
    }
    g.push_back(reshape(t, static_cast<int>(t.size()), 1, 1, 1));
  }

  for (std::size_t f = dense_.size(); f-- > 0;) {
    auto& b = dense_[f];
    const auto& entry = cache.dense[f];
    for (std::size_t s = 0; s < g.size(); ++s) {
      g[s] = activation_backward(g[s], entry.pre_activation[s], b.activation);
    }
    g = batchnorm_backward(g, entry.bn, b.bn);
    for (std::size_t s = 0; s < g.size(); ++s) g[s] = fc_backward(g[s], entry.input[s], b.fc);
  }

  const auto& fs = cache.feature_shape;
  for (auto& t : g) t = reshape(t, fs.channels(), fs.dx(), fs.dy(), fs.dz());

  for (std::size_t m = conv_.size(); m-- > 0;) {
    auto& b = conv_[m];
    const auto& entry = cache.conv[m];
    for (std::size_t s = 0; s < g.size(); ++s) {
      if (b.pool) g[s] = maxpool_backward(g[s], entry.pool[s]);
      g[s] = activation_backward(g[s], entry.pre_activation[s], arch_.activation);
    }
    g = batchnorm_backward(g, entry.bn, b.bn);
    for (std::size_t s = 0; s < g.size(); ++s) {
      g[s] = conv3d_backward(g[s], entry.input[s], b.conv);
    }
  }
}

void CNNStack::zero_grad() {
  auto zero = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
  for (auto& b : conv_) {
    zero(b.conv.grad_weights);
    zero(b.conv.grad_bias);
    zero(b.bn.grad_gamma);
    zero(b.bn.grad_beta);
  }
  for (auto& b : dense_) {
    zero(b.fc.grad_weights);
    zero(b.fc.grad_bias);
    zero(b.bn.grad_gamma);
    zero(b.bn.grad_beta);
  }
}

std::vector<ParamView> CNNStack::parameters() {
  std::vector<ParamView> p;
  for (auto& b : conv_) {
    p.push_back({b.conv.weights, b.conv.grad_weights});
    p.push_back({b.conv.bias, b.conv.grad_bias});
    p.push_back({b.bn.gamma, b.bn.grad_gamma});
    p.push_back({b.bn.beta, b.bn.grad_beta});
  }
  for (auto& b : dense_) {
    p.push_back({b.fc.weights, b.fc.grad_weights});
    p.push_back({b.fc.bias, b.fc.grad_bias});
    p.push_back({b.bn.gamma, b.bn.grad_gamma});
    p.push_back({b.bn.beta, b.bn.grad_beta});
  }
  return p;
}

std::vector<BufferView> CNNStack::buffers() {
  std::vector<BufferView> p;
  for (auto& b : conv_) {
    p.push_back({b.bn.running_mean});
    p.push_back({b.bn.running_var});
  }
  for (auto& b : dense_) {
    p.push_back({b.bn.running_mean});
    p.push_back({b.bn.running_var});
  }
  return p;
}

std::vector<std::span<const double>> CNNStack::parameter_values() const {
  std::vector<std::span<const double>> p;
  auto add = [&](const BatchNorm& bn) {
    p.emplace_back(bn.gamma);
    p.emplace_back(bn.beta);
  };
  for (const auto& b : conv_) {
    p.emplace_back(b.conv.weights);
    p.emplace_back(b.conv.bias);
    add(b.bn);
  }
  for (const auto& b : dense_) {
    p.emplace_back(b.fc.weights);
    p.emplace_back(b.fc.bias);
    add(b.bn);
  }
  return p;
}

std::vector<std::span<const double>> CNNStack::buffer_values() const {
  std::vector<std::span<const double>> p;
  for (const auto& b : conv_) {
    p.emplace_back(b.bn.running_mean);
    p.emplace_back(b.bn.running_var);
  }
  for (const auto& b : dense_) {
    p.emplace_back(b.bn.running_mean);
    p.emplace_back(b.bn.running_var);
  }
  return p;
}

std::size_t CNNStack::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : conv_) n += b.conv.weights.size() + b.conv.bias.size() + 2 * b.bn.features;
  for (const auto& b : dense_) n += b.fc.weights.size() + b.fc.bias.size() + 2 * b.bn.features;
  return n;
}

}  // namespace rcnn::nn
