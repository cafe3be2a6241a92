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
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparsify/tensor.hpp"

namespace sparsify {

// Pruning blocks are described by the set of axes a block spans. Conv weights
// are laid out [I, O, Kx, Ky] and dense weights [I, O]; a spanned axis is one
// written as ":" when slicing a single block out of the weight tensor, e.g.
// filter = W[i, :, :, :] spans {1, 2, 3}.
class GranularitySpec {
 public:
  GranularitySpec() = default;
  GranularitySpec(std::size_t rank, std::vector<std::size_t> spanned)
      : rank_(rank) {
    if (rank != 2 && rank != 4)
      throw std::invalid_argument("granularity rank must be 2 or 4, got " +
                                  std::to_string(rank));
    for (auto a : spanned) {
      if (a >= rank)
        throw std::invalid_argument("granularity axis " + std::to_string(a) +
                                    " out of range for rank " +
                                    std::to_string(rank));
      bits_ |= static_cast<std::uint8_t>(1u << a);
    }
  }

  static GranularitySpec from_bits(std::size_t rank, std::uint8_t bits) {
    std::vector<std::size_t> axes;
    for (std::size_t a = 0; a < rank; ++a)
      if (bits & (1u << a)) axes.push_back(a);
    return GranularitySpec(rank, axes);
  }

  std::size_t rank() const { return rank_; }
  bool spans(std::size_t axis) const { return (bits_ >> axis) & 1u; }
  std::uint8_t bits() const { return bits_; }

  std::vector<std::size_t> spanned_axes() const {
    std::vector<std::size_t> axes;
    for (std::size_t a = 0; a < rank_; ++a)
      if (spans(a)) axes.push_back(a);
    return axes;
  }

  std::optional<std::string> alias() const;

  /// Alias when one exists, otherwise "axes:<list>".
  std::string name() const {
    if (auto a = alias()) return *a;
    std::string s = "axes:";
    bool first = true;
    for (auto a : spanned_axes()) {
      if (!first) s += ",";
      s += std::to_string(a);
      first = false;
    }
    return s;
  }

  friend bool operator==(const GranularitySpec&,
                         const GranularitySpec&) = default;

 private:
  std::size_t rank_ = 0;
  std::uint8_t bits_ = 0;
};

namespace detail {

struct GranularityAlias {
  std::string_view name;
  std::size_t rank;
  std::uint8_t bits;
};

// Rank 4 axes (I, O, Kx, Ky) = (0, 1, 2, 3); rank 2 axes (I, O) = (0, 1).
// "row" deliberately differs between ranks: W[i, o, kx, :] vs W[i, :].
inline constexpr std::array<GranularityAlias, 11> kAliases{{
    {"weight", 4, 0b0000},
    {"row", 4, 0b1000},
    {"kernel", 4, 0b1100},
    {"filter", 4, 0b1110},
    {"shared_weight", 4, 0b0001},
    {"channel", 4, 0b0010},
    {"horizontal_slice", 4, 0b1010},
    {"shared_kernel", 4, 0b1101},
    {"weight", 2, 0b00},
    {"column", 2, 0b01},
    {"row", 2, 0b10},
}};

}  // namespace detail

inline std::optional<std::string> GranularitySpec::alias() const {
  for (const auto& a : detail::kAliases)
    if (a.rank == rank_ && a.bits == bits_) return std::string(a.name);
  return std::nullopt;
}

/// Names accepted for a rank, in table order.
inline std::vector<std::string> granularity_aliases(std::size_t rank) {
  std::vector<std::string> out;
  for (const auto& a : detail::kAliases)
    if (a.rank == rank) out.emplace_back(a.name);
  return out;
}

inline bool is_granularity_alias(std::string_view name) {
  return std::any_of(detail::kAliases.begin(), detail::kAliases.end(),
                     [&](const auto& a) { return a.name == name; });
}

/// Accepts an alias ("filter") or an explicit axis list ("axes:1,2,3";
/// "axes:" is the empty span).
inline GranularitySpec parse_granularity(std::string_view text,
                                         std::size_t rank) {
  if (rank != 2 && rank != 4)
    throw std::invalid_argument("granularity rank must be 2 or 4, got " +
                                std::to_string(rank));
  constexpr std::string_view kAxesPrefix = "axes:";
  if (text.substr(0, kAxesPrefix.size()) == kAxesPrefix) {
    std::vector<std::size_t> axes;
    std::string_view rest = text.substr(kAxesPrefix.size());
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto tok = rest.substr(0, comma);
      if (tok.size() != 1 || tok[0] < '0' || tok[0] > '9')
        throw std::invalid_argument("bad granularity axis list '" +
                                    std::string(text) + "'");
      axes.push_back(static_cast<std::size_t>(tok[0] - '0'));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return GranularitySpec(rank, axes);
  }
  bool known = false;
  for (const auto& a : detail::kAliases) {
    if (a.name != text) continue;
    known = true;
    if (a.rank == rank) return GranularitySpec::from_bits(rank, a.bits);
  }
  if (known)
    throw std::invalid_argument("granularity '" + std::string(text) +
                                "' is not defined for rank " +
                                std::to_string(rank) + " weights");
  throw std::invalid_argument("unknown granularity '" + std::string(text) +
                              "'");
}

/// Partition of a tensor's flat indices into pruning blocks.
struct BlockPartition {
  GranularitySpec spec;
  Shape shape;
  std::vector<std::vector<std::size_t>> blocks;

  std::size_t block_size() const { return blocks.empty() ? 0 : blocks[0].size(); }
  std::size_t total() const { return numel(shape); }
};

/// Blocks are ordered lexicographically over the indexed (non-spanned) axes;
/// members of a block are in ascending flat-index order.
inline BlockPartition enumerate_blocks(const GranularitySpec& spec,
                                       const Shape& shape) {
  if (spec.rank() != shape.size())
    throw std::invalid_argument("granularity rank " +
                                std::to_string(spec.rank()) +
                                " does not match weight shape " +
                                shape_str(shape));
  check_shape(shape);
  std::size_t n_blocks = 1, block_size = 1;
  for (std::size_t a = 0; a < shape.size(); ++a)
    (spec.spans(a) ? block_size : n_blocks) *= shape[a];

  BlockPartition p{spec, shape, {}};
  p.blocks.assign(n_blocks, {});
  for (auto& b : p.blocks) b.reserve(block_size);

  const auto strides = strides_of(shape);
  const std::size_t total = numel(shape);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t block = 0;
    for (std::size_t a = 0; a < shape.size(); ++a) {
      if (spec.spans(a)) continue;
      std::size_t coord = (flat / strides[a]) % shape[a];
      block = block * shape[a] + coord;
    }
    p.blocks[block].push_back(flat);
  }
  return p;
}

/// Mean of member scores per block, in partition order.
inline std::vector<double> aggregate_scores(const Tensor& scores,
                                            const BlockPartition& partition) {
  if (scores.shape() != partition.shape)
    throw std::invalid_argument("aggregate_scores: score shape " +
                                shape_str(scores.shape()) +
                                " vs partition shape " +
                                shape_str(partition.shape));
  std::vector<double> out;
  out.reserve(partition.blocks.size());
  for (const auto& block : partition.blocks) {
    double sum = 0.0;
    for (auto i : block) sum += scores[i];
    out.push_back(sum / static_cast<double>(block.size()));
  }
  return out;
}

/// Expands one keep flag per block into an element mask.
inline Mask expand_block_mask(const BlockPartition& partition,
                              const std::vector<bool>& keep_block) {
  Mask m(partition.shape, 1);
  for (std::size_t b = 0; b < partition.blocks.size(); ++b)
    if (!keep_block[b])
      for (auto i : partition.blocks[b]) m.set(i, false);
  return m;
}

/// True when every block is entirely kept or entirely pruned.
inline bool is_block_pure(const Mask& m, const BlockPartition& partition) {
  if (m.shape() != partition.shape) return false;
  for (const auto& block : partition.blocks) {
    const auto first = m[block.front()];
    for (auto i : block)
      if (m[i] != first) return false;
  }
  return true;
}

/// Number of fully pruned blocks in a mask.
inline std::size_t pruned_blocks(const Mask& m,
                                 const BlockPartition& partition) {
  std::size_t n = 0;
  for (const auto& block : partition.blocks) n += (m[block.front()] == 0);
  return n;
}

}  // namespace sparsify
