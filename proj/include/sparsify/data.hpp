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

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparsify/tensor.hpp"

namespace sparsify {

struct Dataset {
  Tensor inputs;  // [N, ...sample shape]
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const {
    return Shape(inputs.shape().begin() + 1, inputs.shape().end());
  }
};

enum class DatasetKind { kBlobs2d, kPatterns8x8 };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kBlobs2d;
  std::size_t n = 200;
  double separation = 4.0;  // blobs2d only
  double noise = 0.1;       // patterns8x8 pixel noise sigma

  std::string_view name() const {
    return kind == DatasetKind::kBlobs2d ? "blobs2d" : "patterns8x8";
  }
};

inline DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "blobs2d") return DatasetKind::kBlobs2d;
  if (s == "patterns8x8") return DatasetKind::kPatterns8x8;
  throw std::invalid_argument("unknown dataset '" + std::string(s) + "'");
}

/// Per-cluster standard deviation of blobs2d.
inline constexpr double kBlobSigma = 0.5;

/// Noiseless 8x8 bar: horizontal at `pos` for class 0, vertical for class 1.
inline std::vector<double> bar_template(int label, std::size_t pos) {
  std::vector<double> img(64, 0.0);
  for (std::size_t k = 0; k < 8; ++k)
    img[label == 0 ? pos * 8 + k : k * 8 + pos] = 1.0;
  return img;
}

/// Labels alternate 0,1,0,... so classes are balanced within one.
inline Dataset make_dataset(const DatasetSpec& spec, Rng& rng) {
  if (spec.n < 2)
    throw std::invalid_argument("dataset needs at least 2 samples");
  Dataset d;
  d.labels.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) d.labels[i] = static_cast<int>(i % 2);

  if (spec.kind == DatasetKind::kBlobs2d) {
    d.inputs = Tensor({spec.n, 2});
    for (std::size_t i = 0; i < spec.n; ++i) {
      const double cx = (d.labels[i] == 0 ? -0.5 : 0.5) * spec.separation;
      d.inputs[2 * i] = cx + kBlobSigma * rng.normal();
      d.inputs[2 * i + 1] = kBlobSigma * rng.normal();
    }
  } else {
    d.inputs = Tensor({spec.n, 1, 8, 8});
    for (std::size_t i = 0; i < spec.n; ++i) {
      const auto img = bar_template(d.labels[i], rng.below(8));
      for (std::size_t p = 0; p < 64; ++p)
        d.inputs[i * 64 + p] = img[p] + spec.noise * rng.normal();
    }
  }
  return d;
}

/// Copies the selected samples into a batch.
inline std::pair<Tensor, std::vector<int>> gather(
    const Dataset& d, std::span<const std::size_t> idx) {
  const std::size_t stride = numel(d.sample_shape());
  Shape shape{idx.size()};
  const auto s = d.sample_shape();
  shape.insert(shape.end(), s.begin(), s.end());
  Tensor x(shape);
  std::vector<int> y;
  y.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    for (std::size_t j = 0; j < stride; ++j)
      x[k * stride + j] = d.inputs[idx[k] * stride + j];
    y.push_back(d.labels[idx[k]]);
  }
  return {std::move(x), std::move(y)};
}

}  // namespace sparsify
