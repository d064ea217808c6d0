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

#include "rcnn/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcnn::nn {

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax of an empty score vector");
  const double shift = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp(scores[k] - shift);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

int argmax_state(std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < probabilities.size(); ++k) {
    if (probabilities[k] > probabilities[best]) best = k;
  }
  return static_cast<int>(best) + 1;
}

double cross_entropy(std::span<const double> probabilities, int true_class) {
  if (true_class < 1 || static_cast<std::size_t>(true_class) > probabilities.size()) {
    throw std::invalid_argument("cross entropy: true class out of range");
  }
  return -std::log(std::max(probabilities[true_class - 1], kProbabilityFloor));
}

std::vector<double> softmax_cross_entropy_grad(std::span<const double> probabilities,
                                               int true_class) {
  if (true_class < 1 || static_cast<std::size_t>(true_class) > probabilities.size()) {
    throw std::invalid_argument("cross entropy: true class out of range");
  }
  std::vector<double> g(probabilities.begin(), probabilities.end());
  g[true_class - 1] -= 1.0;
  return g;
}

}  // namespace rcnn::nn
