// Copyright 2026 The Sparsify Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparsify/granularity.hpp"

namespace sparsify {

enum class ContextKind { kLocal, kGlobal, kPerLayer };

struct ContextSpec {
  ContextKind kind = ContextKind::kLocal;
  std::vector<double> per_layer;  // percentages, only for kPerLayer

  static ContextSpec local() { return {}; }
  static ContextSpec global() { return {ContextKind::kGlobal, {}}; }
  static ContextSpec per_layer_list(std::vector<double> s) {
    for (double v : s)
      if (!(v >= 0.0 && v <= 100.0))
        throw std::invalid_argument("per-layer sparsity " + std::to_string(v) +
                                    " outside [0,100]");
    return {ContextKind::kPerLayer, std::move(s)};
  }

  std::string_view name() const {
    switch (kind) {
      case ContextKind::kLocal: return "local";
      case ContextKind::kGlobal: return "global";
      case ContextKind::kPerLayer: return "per_layer";
    }
    return "?";
  }
};

inline ContextSpec parse_context(std::string_view name) {
  if (name == "local") return ContextSpec::local();
  if (name == "global") return ContextSpec::global();
  throw std::invalid_argument("unknown context '" + std::string(name) + "'");
}

struct LayerScores {
  std::size_t layer_id = 0;
  BlockPartition partition;
  std::vector<double> block_scores;
};

inline void check_sparsity(double sparsity) {
  if (!(sparsity >= 0.0 && sparsity <= 100.0))
    throw std::invalid_argument("sparsity " + std::to_string(sparsity) +
                                " outside [0,100]");
}

/// floor(n_blocks * sparsity / 100); never overshoots the request.
inline std::size_t pruned_count(std::size_t n_blocks, double sparsity) {
  check_sparsity(sparsity);
  const double exact = static_cast<double>(n_blocks) * sparsity / 100.0;
  // Absorb representation error so that e.g. 100 * 0.29 * ... lands on the
  // integer it denotes instead of one below.
  const double k = std::floor(exact + 1e-9);
  return std::min(n_blocks, static_cast<std::size_t>(k));
}

namespace detail {

inline void check_scores(const LayerScores& l) {
  if (l.block_scores.size() != l.partition.blocks.size())
    throw std::invalid_argument("layer " + std::to_string(l.layer_id) +
                                ": score count does not match block count");
  for (double s : l.block_scores)
    if (!std::isfinite(s))
      throw std::invalid_argument("layer " + std::to_string(l.layer_id) +
                                  ": non-finite block score");
}

// Indices of the k lowest scores; ties go to the lower position first.
inline std::vector<std::size_t> lowest_k(const std::vector<double>& scores,
                                         std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto cmp = [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), cmp);
  order.resize(k);
  return order;
}

inline Mask local_mask(const LayerScores& layer, double sparsity) {
  check_scores(layer);
  const auto k = pruned_count(layer.block_scores.size(), sparsity);
  std::vector<bool> keep(layer.block_scores.size(), true);
  for (auto b : lowest_k(layer.block_scores, k)) keep[b] = false;
  return expand_block_mask(layer.partition, keep);
}

}  // namespace detail

inline std::vector<Mask> select_local(const std::vector<LayerScores>& layers,
                                      double sparsity) {
  check_sparsity(sparsity);
  std::vector<Mask> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(detail::local_mask(l, sparsity));
  return out;
}

/// All block scores compared together, concatenated in layer then block order.
inline std::vector<Mask> select_global(const std::vector<LayerScores>& layers,
                                       double sparsity) {
  check_sparsity(sparsity);
  std::vector<double> all;
  std::vector<std::size_t> offset;
  for (const auto& l : layers) {
    detail::check_scores(l);
    offset.push_back(all.size());
    all.insert(all.end(), l.block_scores.begin(), l.block_scores.end());
  }
  std::vector<bool> keep(all.size(), true);
  for (auto g : detail::lowest_k(all, pruned_count(all.size(), sparsity)))
    keep[g] = false;

  std::vector<Mask> out;
  out.reserve(layers.size());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto n = layers[li].block_scores.size();
    std::vector<bool> layer_keep(keep.begin() + static_cast<long>(offset[li]),
                                 keep.begin() + static_cast<long>(offset[li] + n));
    out.push_back(expand_block_mask(layers[li].partition, layer_keep));
  }
  return out;
}

inline std::vector<Mask> select_per_layer(
    const std::vector<LayerScores>& layers,
    const std::vector<double>& sparsities) {
  if (sparsities.size() != layers.size())
    throw std::invalid_argument(
        "per-layer sparsity list has " + std::to_string(sparsities.size()) +
        " entries for " + std::to_string(layers.size()) + " prunable layers");
  std::vector<Mask> out;
  out.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i)
    out.push_back(detail::local_mask(layers[i], sparsities[i]));
  return out;
}

}  // namespace sparsify
