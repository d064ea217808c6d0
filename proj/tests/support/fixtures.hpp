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

#include "rcnn/chain.hpp"
#include "rcnn/grid.hpp"

namespace rcnn::testing {

/// Horizontal layers of alternating category, `thickness` nodes each.
inline CategoricalGrid layered_grid(Dims3 d, int thickness) {
  CategoricalGrid g(d, 2);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) g.set(x, y, z, (z / thickness) % 2 + 1);
  return g;
}

/// A chain small enough to train in well under a second.
inline RCNNConfig tiny_config() {
  RCNNConfig c;
  c.chain_length = 2;
  c.window = {{7, 7, 7}, {3, 3, 3}};
  c.conv_channels = {3, 3};
  c.pool_layers = {2};
  c.hidden_widths = {8};
  c.epochs = 2;
  c.batch_size = 8;
  c.pairs_per_epoch = 32;
  c.seed = 5;
  return c;
}

}  // namespace rcnn::testing
