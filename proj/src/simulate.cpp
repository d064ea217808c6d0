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

#include "rcnn/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "rcnn/nn/loss.hpp"
#include "rcnn/seed.hpp"

namespace rcnn {

RandomPath random_path(Dims3 dims, std::uint64_t seed) {
  if (!dims.positive()) throw std::invalid_argument("random path needs positive dimensions");
  RandomPath p;
  p.seed = seed;
  p.order.resize(dims.size());
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(p.order.begin(), p.order.end(), rng);
  return p;
}

int draw_category(std::span<const double> probabilities, std::mt19937_64& rng) {
  if (probabilities.empty()) throw std::invalid_argument("draw from an empty distribution");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double cdf = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    cdf += probabilities[k];
    if (u < cdf) return static_cast<int>(k) + 1;
  }
  // u fell past a cdf that rounded below 1: last category with positive mass.
  for (std::size_t k = probabilities.size(); k-- > 0;)
    if (probabilities[k] > 0.0) return static_cast<int>(k) + 1;
  return static_cast<int>(probabilities.size());
}

DomainPassStats simulate_domain(const RCNNModel& model, int chain_index,
                                std::vector<CategoricalGrid>& domains, const RandomPath& path,
                                std::mt19937_64& rng, const SimulationOptions& options) {
  if (chain_index < 1 || chain_index > static_cast<int>(model.chain.size()) ||
      static_cast<std::size_t>(chain_index) >= domains.size()) {
    throw std::invalid_argument(fmt::format("no CNN_{} / D^{} to simulate", chain_index, chain_index));
  }
  if (!(options.freeze_fraction > 0.0 && options.freeze_fraction <= 1.0)) {
    throw std::invalid_argument("freeze fraction outside (0, 1]");
  }
  const auto& window = model.config.window;
  const auto& stack = model.chain[chain_index - 1];
  auto& domain = domains[chain_index];
  const int k = domain.num_categories();
  const Dims3 ip = window.ip;
  const std::size_t ip_nodes = ip.size();
  if (path.order.size() != domain.size()) throw std::invalid_argument("path does not cover domain");
  if (ip.nx > domain.nx() || ip.ny > domain.ny() || ip.nz > domain.nz()) {
    throw std::invalid_argument("domain " + to_string(domain.dims()) +
                                " smaller than inner pattern " + to_string(ip));
  }

  const std::span<const CategoricalGrid> inputs(domains.data(), static_cast<std::size_t>(chain_index));
  const std::size_t center_local = (static_cast<std::size_t>(ip.nz / 2) * ip.ny + ip.ny / 2) * ip.nx + ip.nx / 2;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> scores_at(k);
  DomainPassStats stats;
  std::size_t unknown = domain.count(kUnknown);

  auto assign = [&](const nn::Tensor& scores, std::size_t local, std::size_t node) {
    for (int c = 0; c < k; ++c) scores_at[c] = scores[c * ip_nodes + local];
    const auto p = nn::softmax(scores_at);
    const int cat = options.assignment == AssignmentMode::Draw ? draw_category(p, rng)
                                                               : nn::argmax_state(p);
    domain.set(node, cat);
    --unknown;
  };

  while (unknown > 0) {
    for (std::size_t node : path.order) {
      if (domain[node] != kUnknown) continue;
      const Index3 c = domain.coords(node);
      const auto scores = stack.forward(assemble_input(inputs, c, window.sg));
      ++stats.visits;
      assign(scores, center_local, node);

      std::size_t local = 0;
      for (int z = 0; z < ip.nz; ++z)
        for (int y = 0; y < ip.ny; ++y)
          for (int x = 0; x < ip.nx; ++x, ++local) {
            if (local == center_local) continue;
            const int gx = c.x + x - ip.nx / 2, gy = c.y + y - ip.ny / 2, gz = c.z + z - ip.nz / 2;
            if (!domain.contains(gx, gy, gz)) continue;
            const std::size_t g = domain.index(gx, gy, gz);
            if (domain[g] != kUnknown) continue;
            if (options.freeze_fraction < 1.0 && uniform(rng) >= options.freeze_fraction) continue;
            assign(scores, local, g);
          }
    }
    stats.unknown_after_pass.push_back(unknown);
  }
  return stats;
}

std::vector<CategoricalGrid> simulate_chain(const RCNNModel& model, const CategoricalGrid& hard,
                                            const RandomPath& path, std::mt19937_64& rng,
                                            const SimulationOptions& options,
                                            std::vector<DomainPassStats>* stats) {
  const int n = static_cast<int>(model.chain.size());
  std::vector<CategoricalGrid> domains(n + 1, hard);
  if (stats) stats->clear();
  for (int i = 1; i <= n; ++i) {
    auto s = simulate_domain(model, i, domains, path, rng, options);
    if (stats) stats->push_back(std::move(s));
  }
  return domains;
}

std::uint64_t realization_path_seed(std::uint64_t seed) { return derive_seed(seed, "path"); }
std::uint64_t realization_draw_seed(std::uint64_t seed) { return derive_seed(seed, "draws"); }

CategoricalGrid simulate_realization(const RCNNModel& model, const DrillHoleSet& hard_data,
                                     Dims3 dims, std::uint64_t seed,
                                     const SimulationOptions& options) {
  if (!model.trained()) throw std::logic_error("simulation requires a trained model");
  const CategoricalGrid empty(dims, model.config.num_categories);
  const auto hard = migrate_hard_data(empty, hard_data).grid;
  const auto path = random_path(dims, realization_path_seed(seed));
  std::mt19937_64 rng(realization_draw_seed(seed));
  auto domains = simulate_chain(model, hard, path, rng, options);
  return std::move(domains.back());
}

CategoricalGrid simulate_realization(const RCNNModel& model, const DrillHoleSet& hard_data,
                                     Dims3 dims, std::uint64_t seed) {
  return simulate_realization(model, hard_data, dims, seed,
                              {model.config.freeze_fraction, model.config.assignment});
}

Ensemble run_ensemble(const SimulationJob& job) {
  if (job.model == nullptr) throw std::invalid_argument("simulation job without a model");
  if (job.realizations < 1) throw std::invalid_argument("need at least one realization");
  Ensemble ensemble;
  ensemble.realizations.resize(job.realizations);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int r = next++; r < job.realizations; r = next++) {
      try {
        ensemble.realizations[r] = simulate_realization(
            *job.model, job.hard_data, job.dims, job.base_seed + static_cast<std::uint64_t>(r),
            job.options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(job.jobs, 1, job.realizations);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return ensemble;
}

}  // namespace rcnn
