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

#include "rcnn/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace rcnn::nn {

Activation parse_activation(std::string_view name) {
  if (name == "relu" || name == "ReLU") return Activation::ReLU;
  if (name == "sigmoid" || name == "Sigmoid") return Activation::Sigmoid;
  if (name == "tanh" || name == "TanH") return Activation::TanH;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument(fmt::format("unknown activation '{}'", name));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::TanH: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::TanH: return std::tanh(x);
    case Activation::Identity: return x;
  }
  return x;
}

double activation_derivative(Activation a, double x) {
  switch (a) {
    case Activation::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::TanH: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

Tensor activation_forward(const Tensor& x, Activation a) {
  Tensor y = x;
  if (a == Activation::Identity) return y;
  for (double& v : y.data()) v = activate(a, v);
  return y;
}

Tensor activation_backward(const Tensor& grad_out, const Tensor& x, Activation a) {
  if (!grad_out.same_shape(x)) throw std::invalid_argument("activation backward: shape mismatch");
  Tensor g = grad_out;
  if (a == Activation::Identity) return g;
  auto gd = g.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= activation_derivative(a, xd[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Convolution
//
// The input is copied into a zero-padded volume P. An output node (x, y, z)
// reads P at base + offset(kx, ky, kz) with base = z*plane + y*Wp + x, so each
// filter tap becomes one long axpy over the flattened padded lattice; entries
// of the accumulator that fall in the padding columns are discarded.

ConvLayer::ConvLayer(int in, int out, int fx_, int fy_, int fz_)
    : in_channels(in), out_channels(out), fx(fx_), fy(fy_), fz(fz_) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("conv channel counts must be positive");
  if (fx % 2 == 0 || fy % 2 == 0 || fz % 2 == 0 || fx <= 0 || fy <= 0 || fz <= 0) {
    throw std::invalid_argument("conv filter extents must be odd");
  }
  const std::size_t n = static_cast<std::size_t>(out) * in * fx * fy * fz;
  weights.assign(n, 0.0);
  grad_weights.assign(n, 0.0);
  bias.assign(out, 0.0);
  grad_bias.assign(out, 0.0);
}

namespace {

struct PaddedGeometry {
  int px, py, pz;
  std::size_t wp, hp, dp, plane, volume, span;

  PaddedGeometry(const Tensor& t, const ConvLayer& l)
      : px(l.fx / 2), py(l.fy / 2), pz(l.fz / 2) {
    wp = static_cast<std::size_t>(t.dx() + 2 * px);
    hp = static_cast<std::size_t>(t.dy() + 2 * py);
    dp = static_cast<std::size_t>(t.dz() + 2 * pz);
    plane = wp * hp;
    volume = plane * dp;
    span = (t.dz() - 1) * plane + (t.dy() - 1) * wp + t.dx();
  }
  std::size_t base(int x, int y, int z) const { return z * plane + y * wp + x; }
  std::size_t tap(int kx, int ky, int kz) const { return kz * plane + ky * wp + kx; }
};

std::vector<double> pad_input(const Tensor& in, const PaddedGeometry& g) {
  std::vector<double> p(static_cast<std::size_t>(in.channels()) * g.volume, 0.0);
  for (int c = 0; c < in.channels(); ++c) {
    double* dst = p.data() + c * g.volume;
    for (int z = 0; z < in.dz(); ++z)
      for (int y = 0; y < in.dy(); ++y) {
        const double* src = &in.at(c, 0, y, z);
        std::copy(src, src + in.dx(), dst + g.base(g.px, y + g.py, z + g.pz));
      }
  }
  return p;
}

}  // namespace

Tensor conv3d_forward(const Tensor& input, const ConvLayer& layer) {
  if (input.channels() != layer.in_channels) {
    throw std::invalid_argument(fmt::format("conv3d: input has {} channels, layer expects {}",
                                            input.channels(), layer.in_channels));
  }
  const PaddedGeometry g(input, layer);
  const auto padded = pad_input(input, g);
  Tensor out(layer.out_channels, input.dx(), input.dy(), input.dz());
  std::vector<double> acc(g.span);

  for (int co = 0; co < layer.out_channels; ++co) {
    std::fill(acc.begin(), acc.end(), layer.bias[co]);
    for (int ci = 0; ci < layer.in_channels; ++ci) {
      const double* src_c = padded.data() + ci * g.volume;
      for (int kz = 0; kz < layer.fz; ++kz)
        for (int ky = 0; ky < layer.fy; ++ky)
          for (int kx = 0; kx < layer.fx; ++kx) {
            const double w = layer.weight(co, ci, kx, ky, kz);
            const double* src = src_c + g.tap(kx, ky, kz);
            double* a = acc.data();
            for (std::size_t j = 0; j < g.span; ++j) a[j] += w * src[j];
          }
    }
    for (int z = 0; z < input.dz(); ++z)
      for (int y = 0; y < input.dy(); ++y) {
        const double* row = acc.data() + g.base(0, y, z);
        std::copy(row, row + input.dx(), &out.at(co, 0, y, z));
      }
  }
  return out;
}

Tensor conv3d_backward(const Tensor& grad_out, const Tensor& input, ConvLayer& layer) {
  if (input.channels() != layer.in_channels || grad_out.channels() != layer.out_channels ||
      grad_out.dx() != input.dx() || grad_out.dy() != input.dy() || grad_out.dz() != input.dz()) {
    throw std::invalid_argument(fmt::format("conv3d backward: grad {} vs input {} for layer {}->{}",
                                            grad_out.shape_string(), input.shape_string(),
                                            layer.in_channels, layer.out_channels));
  }
  const PaddedGeometry g(input, layer);
  const auto padded = pad_input(input, g);
  std::vector<double> grad_padded(padded.size(), 0.0);
  std::vector<double> gspan(g.span);

  for (int co = 0; co < layer.out_channels; ++co) {
    std::fill(gspan.begin(), gspan.end(), 0.0);
    double bias_sum = 0.0;
    for (int z = 0; z < input.dz(); ++z)
      for (int y = 0; y < input.dy(); ++y) {
        const double* row = &grad_out.at(co, 0, y, z);
        std::copy(row, row + input.dx(), gspan.data() + g.base(0, y, z));
        for (int x = 0; x < input.dx(); ++x) bias_sum += row[x];
      }
    layer.grad_bias[co] += bias_sum;

    for (int ci = 0; ci < layer.in_channels; ++ci) {
      const double* src_c = padded.data() + ci * g.volume;
      double* dst_c = grad_padded.data() + ci * g.volume;
      for (int kz = 0; kz < layer.fz; ++kz)
        for (int ky = 0; ky < layer.fy; ++ky)
          for (int kx = 0; kx < layer.fx; ++kx) {
            const std::size_t off = g.tap(kx, ky, kz);
            const double* src = src_c + off;
            double* dst = dst_c + off;
            const double* gs = gspan.data();
            const std::size_t wi = layer.weight_index(co, ci, kx, ky, kz);
            const double w = layer.weights[wi];
            double dw = 0.0;
            for (std::size_t j = 0; j < g.span; ++j) {
              dw += gs[j] * src[j];
              dst[j] += w * gs[j];
            }
            layer.grad_weights[wi] += dw;
          }
    }
  }

  Tensor grad_in(input.channels(), input.dx(), input.dy(), input.dz());
  for (int c = 0; c < input.channels(); ++c) {
    const double* src = grad_padded.data() + c * g.volume;
    for (int z = 0; z < input.dz(); ++z)
      for (int y = 0; y < input.dy(); ++y) {
        const double* row = src + g.base(g.px, y + g.py, z + g.pz);
        std::copy(row, row + input.dx(), &grad_in.at(c, 0, y, z));
      }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Batch normalization

BatchNorm::BatchNorm(int n, double momentum_, double epsilon_)
    : features(n), momentum(momentum_), epsilon(epsilon_) {
  if (n <= 0) throw std::invalid_argument("batch norm needs at least one feature map");
  if (!(momentum > 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum outside (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  gamma.assign(n, 1.0);
  beta.assign(n, 0.0);
  running_mean.assign(n, 0.0);
  running_var.assign(n, 1.0);
  grad_gamma.assign(n, 0.0);
  grad_beta.assign(n, 0.0);
}

namespace {

void check_batch(const std::vector<Tensor>& batch, const BatchNorm& bn) {
  for (const auto& t : batch) {
    if (t.channels() != bn.features || !t.same_shape(batch.front())) {
      throw std::invalid_argument(fmt::format("batch norm: tensor {} incompatible with {} features",
                                              t.shape_string(), bn.features));
    }
  }
}

}  // namespace

Tensor batchnorm_infer(const Tensor& x, const BatchNorm& bn) {
  if (x.channels() != bn.features) throw std::invalid_argument("batch norm: feature mismatch");
  Tensor y = x;
  for (int c = 0; c < bn.features; ++c) {
    const double scale = bn.gamma[c] / std::sqrt(bn.running_var[c] + bn.epsilon);
    const double shift = bn.beta[c] - bn.running_mean[c] * scale;
    for (double& v : y.channel(c)) v = v * scale + shift;
  }
  return y;
}

std::vector<Tensor> batchnorm_forward(const std::vector<Tensor>& batch, BatchNorm& bn, Mode mode,
                                      BatchNormCache* cache) {
  if (mode == Mode::Infer) {
    std::vector<Tensor> out;
    out.reserve(batch.size());
    for (const auto& t : batch) out.push_back(batchnorm_infer(t, bn));
    return out;
  }
  if (batch.empty()) throw std::invalid_argument("batch norm: empty batch in train mode");
  check_batch(batch, bn);

  const std::size_t per = batch.front().spatial_size();
  const double n = static_cast<double>(per * batch.size());
  std::vector<Tensor> out = batch;
  std::vector<double> inv_std(bn.features);

  for (int c = 0; c < bn.features; ++c) {
    double mean = 0.0;
    for (const auto& t : batch)
      for (double v : t.channel(c)) mean += v;
    mean /= n;
    double var = 0.0;
    for (const auto& t : batch)
      for (double v : t.channel(c)) var += (v - mean) * (v - mean);
    var /= n;

    const double is = 1.0 / std::sqrt(var + bn.epsilon);
    inv_std[c] = is;
    for (auto& t : out)
      for (double& v : t.channel(c)) v = (v - mean) * is;

    const double unbiased = n > 1.0 ? var * n / (n - 1.0) : var;
    bn.running_mean[c] = bn.momentum * bn.running_mean[c] + (1.0 - bn.momentum) * mean;
    bn.running_var[c] = bn.momentum * bn.running_var[c] + (1.0 - bn.momentum) * unbiased;
  }

  if (cache) {
    cache->normalized = out;
    cache->inv_std = inv_std;
  }
  for (auto& t : out)
    for (int c = 0; c < bn.features; ++c)
      for (double& v : t.channel(c)) v = bn.gamma[c] * v + bn.beta[c];
  return out;
}

std::vector<Tensor> batchnorm_backward(const std::vector<Tensor>& grad_out,
                                       const BatchNormCache& cache, BatchNorm& bn) {
  if (grad_out.size() != cache.normalized.size()) {
    throw std::invalid_argument("batch norm backward: batch size mismatch");
  }
  for (std::size_t b = 0; b < grad_out.size(); ++b) {
    if (!grad_out[b].same_shape(cache.normalized[b])) {
      throw std::invalid_argument("batch norm backward: shape mismatch");
    }
  }
  if (grad_out.empty()) return {};
  const std::size_t per = grad_out.front().spatial_size();
  const double n = static_cast<double>(per * grad_out.size());
  std::vector<Tensor> grad_in = grad_out;

  for (int c = 0; c < bn.features; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t b = 0; b < grad_out.size(); ++b) {
      auto g = grad_out[b].channel(c);
      auto xh = cache.normalized[b].channel(c);
      for (std::size_t i = 0; i < per; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    bn.grad_beta[c] += sum_g;
    bn.grad_gamma[c] += sum_gx;

    // d xhat = gamma * g;  dx = inv_std / n * (n dxhat - sum dxhat - xhat * sum(dxhat xhat))
    const double k = bn.gamma[c] * cache.inv_std[c] / n;
    for (std::size_t b = 0; b < grad_out.size(); ++b) {
      auto gi = grad_in[b].channel(c);
      auto xh = cache.normalized[b].channel(c);
      for (std::size_t i = 0; i < per; ++i) gi[i] = k * (n * gi[i] - sum_g - xh[i] * sum_gx);
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Max pooling

Tensor maxpool_forward(const Tensor& input, PoolCache* cache) {
  const int ox = (input.dx() + 1) / 2, oy = (input.dy() + 1) / 2, oz = (input.dz() + 1) / 2;
  Tensor out(input.channels(), ox, oy, oz);
  if (cache) {
    cache->channels = input.channels();
    cache->dx = input.dx();
    cache->dy = input.dy();
    cache->dz = input.dz();
    cache->argmax.assign(out.size(), 0);
  }
  std::size_t o = 0;
  for (int c = 0; c < input.channels(); ++c)
    for (int z = 0; z < oz; ++z)
      for (int y = 0; y < oy; ++y)
        for (int x = 0; x < ox; ++x, ++o) {
          std::size_t best_i = input.index(c, 2 * x, 2 * y, 2 * z);
          double best = input[best_i];
          for (int kz = 2 * z; kz < std::min(2 * z + 2, input.dz()); ++kz)
            for (int ky = 2 * y; ky < std::min(2 * y + 2, input.dy()); ++ky)
              for (int kx = 2 * x; kx < std::min(2 * x + 2, input.dx()); ++kx) {
                const std::size_t i = input.index(c, kx, ky, kz);
                if (input[i] > best) {
                  best = input[i];
                  best_i = i;
                }
              }
          out[o] = best;
          if (cache) cache->argmax[o] = static_cast<std::uint32_t>(best_i);
        }
  return out;
}

Tensor maxpool_backward(const Tensor& grad_out, const PoolCache& cache) {
  if (grad_out.size() != cache.argmax.size()) {
    throw std::invalid_argument("max pool backward: gradient does not match cached forward");
  }
  Tensor grad_in(cache.channels, cache.dx, cache.dy, cache.dz);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[cache.argmax[o]] += grad_out[o];
  return grad_in;
}

// ---------------------------------------------------------------------------
// Fully connected

FCLayer::FCLayer(int in, int out) : n_in(in), n_out(out) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("dense layer sizes must be positive");
  weights.assign(static_cast<std::size_t>(in) * out, 0.0);
  grad_weights.assign(weights.size(), 0.0);
  bias.assign(out, 0.0);
  grad_bias.assign(out, 0.0);
}

Tensor fc_forward(const Tensor& input, const FCLayer& layer) {
  if (input.size() != static_cast<std::size_t>(layer.n_in)) {
    throw std::invalid_argument(
        fmt::format("dense layer expects {} inputs, got {}", layer.n_in, input.size()));
  }
  Tensor out(layer.n_out, 1, 1, 1);
  const double* x = input.data().data();
  for (int o = 0; o < layer.n_out; ++o) {
    const double* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.n_in;
    double s = layer.bias[o];
    for (int i = 0; i < layer.n_in; ++i) s += w[i] * x[i];
    out[o] = s;
  }
  return out;
}

Tensor fc_backward(const Tensor& grad_out, const Tensor& input, FCLayer& layer) {
  if (grad_out.size() != static_cast<std::size_t>(layer.n_out) ||
      input.size() != static_cast<std::size_t>(layer.n_in)) {
    throw std::invalid_argument("dense backward: shape mismatch");
  }
  Tensor grad_in(input.channels(), input.dx(), input.dy(), input.dz());
  const double* x = input.data().data();
  double* gx = grad_in.data().data();
  for (int o = 0; o < layer.n_out; ++o) {
    const double g = grad_out[o];
    layer.grad_bias[o] += g;
    if (g == 0.0) continue;
    double* gw = layer.grad_weights.data() + static_cast<std::size_t>(o) * layer.n_in;
    const double* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.n_in;
    for (int i = 0; i < layer.n_in; ++i) {
      gw[i] += g * x[i];
      gx[i] += g * w[i];
    }
  }
  return grad_in;
}

}  // namespace rcnn::nn
