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

#include <span>
#include <vector>

namespace rcnn::nn {

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> scores);

/// 1-based category of the largest probability; ties go to the lowest index.
int argmax_state(std::span<const double> probabilities);

inline constexpr double kProbabilityFloor = 1e-12;

/// -log p(true_class) against a one-hot target, with p clamped below at 1e-12.
/// `true_class` is 1-based.
double cross_entropy(std::span<const double> probabilities, int true_class);

/// Gradient of cross_entropy(softmax(s), c) with respect to s: p - onehot(c).
std::vector<double> softmax_cross_entropy_grad(std::span<const double> probabilities,
                                               int true_class);

}  // namespace rcnn::nn
