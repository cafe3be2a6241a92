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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsify {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4)
    throw std::invalid_argument("tensor rank must be 1..4, got " +
                                std::to_string(shape.size()));
  for (auto d : shape)
    if (d == 0)
      throw std::invalid_argument("zero-sized axis in shape " +
                                  shape_str(shape));
}

/// Row-major strides for a shape.
inline std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) st[a - 1] = st[a] * shape[a];
  return st;
}

/// Dense row-major tensor of 64-bit reals, rank 1 to 4.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(numel(shape_), fill);
  }
  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != numel(shape_))
      throw std::invalid_argument("tensor data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape " + shape_str(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Binary keep/prune mask congruent with a weight tensor: 1 keeps, 0 prunes.
class Mask {
 public:
  Mask() = default;
  explicit Mask(Shape shape, std::uint8_t fill = 1) : shape_(std::move(shape)) {
    check_shape(shape_);
    check_bit(fill);
    bits_.assign(numel(shape_), fill);
  }
  Mask(Shape shape, std::vector<std::uint8_t> bits)
      : shape_(std::move(shape)), bits_(std::move(bits)) {
    check_shape(shape_);
    if (bits_.size() != numel(shape_))
      throw std::invalid_argument("mask length does not match shape " +
                                  shape_str(shape_));
    for (auto b : bits_) check_bit(b);
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return bits_.size(); }
  std::span<const std::uint8_t> bits() const { return bits_; }

  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool keep) { bits_[i] = keep ? 1 : 0; }

  std::size_t zeros() const {
    std::size_t z = 0;
    for (auto b : bits_) z += (b == 0);
    return z;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  static void check_bit(std::uint8_t b) {
    if (b > 1)
      throw std::invalid_argument("mask value " + std::to_string(b) +
                                  " not in {0,1}");
  }

  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

inline Tensor apply_mask(const Tensor& w, const Mask& m) {
  if (w.shape() != m.shape())
    throw std::invalid_argument("apply_mask: tensor shape " +
                                shape_str(w.shape()) + " vs mask shape " +
                                shape_str(m.shape()));
  Tensor out = w;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!m[i]) out[i] = 0.0;
  return out;
}

/// In-place variant used on the training hot path.
inline void apply_mask_inplace(Tensor& w, const Mask& m) {
  if (w.shape() != m.shape())
    throw std::invalid_argument("apply_mask: shape mismatch");
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!m[i]) w[i] = 0.0;
}

/// Fraction of pruned entries.
inline double sparsity_of(const Mask& m) {
  return static_cast<double>(m.zeros()) / static_cast<double>(m.size());
}

/// Fraction of pruned entries over several masks taken as one vector.
inline double sparsity_of(std::span<const Mask> masks) {
  std::size_t zeros = 0, total = 0;
  for (const auto& m : masks) {
    zeros += m.zeros();
    total += m.size();
  }
  return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0;
}

/// Counter-based generator: output n is splitmix64 of seed + n * golden.
/// Any draw depends only on (seed, counter), so streams are reproducible on
/// every platform and cheap to split.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

struct InitScheme {
  enum class Kind { kUniform, kConstant } kind = Kind::kUniform;
  double value = 0.0;

  static InitScheme uniform() { return {}; }
  static InitScheme constant(double c) { return {Kind::kConstant, c}; }
};

/// Fan-in of a weight tensor in the [I, O, ...] layout: every axis except O.
inline std::size_t fan_in_of(const Shape& shape) {
  if (shape.size() < 2) return shape.at(0);
  return numel(shape) / shape[1];
}

/// Kaiming-like uniform init draws from +-sqrt(6 / fan_in).
inline Tensor init_weights(const Shape& shape, InitScheme scheme, Rng& rng) {
  Tensor t(shape);
  if (scheme.kind == InitScheme::Kind::kConstant) {
    for (auto& v : t.data()) v = scheme.value;
    return t;
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in_of(shape)));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

inline bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace sparsify
