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
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparsify/tensor.hpp"

namespace sparsify {

enum class LayerKind { kDense, kConv2d, kRelu, kFlatten };

inline std::string_view layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kFlatten: return "flatten";
  }
  return "?";
}

inline LayerKind parse_layer_kind(std::string_view s) {
  if (s == "dense") return LayerKind::kDense;
  if (s == "conv2d") return LayerKind::kConv2d;
  if (s == "relu") return LayerKind::kRelu;
  if (s == "flatten") return LayerKind::kFlatten;
  throw std::invalid_argument("unknown layer type '" + std::string(s) + "'");
}

/// One layer. Dense weights are [I, O] (y = x W + b); conv weights are
/// [I, O, Kx, Ky] with stride 1 and no padding (valid cross-correlation).
struct Layer {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in = 0, out = 0, kx = 0, ky = 0;
  Tensor weight;
  Tensor bias;

  static Layer dense(std::size_t in, std::size_t out) {
    Layer l;
    l.kind = LayerKind::kDense;
    l.in = in;
    l.out = out;
    l.weight = Tensor({in, out});
    l.bias = Tensor({out});
    return l;
  }
  static Layer conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kx,
                      std::size_t ky) {
    Layer l;
    l.kind = LayerKind::kConv2d;
    l.in = in_ch;
    l.out = out_ch;
    l.kx = kx;
    l.ky = ky;
    l.weight = Tensor({in_ch, out_ch, kx, ky});
    l.bias = Tensor({out_ch});
    return l;
  }
  static Layer relu() { return Layer{}; }
  static Layer flatten() {
    Layer l;
    l.kind = LayerKind::kFlatten;
    return l;
  }

  bool prunable() const {
    return kind == LayerKind::kDense || kind == LayerKind::kConv2d;
  }
};

/// Per-sample output shape of a layer, or throws on mismatch.
inline Shape layer_output_shape(const Layer& l, const Shape& in,
                                std::size_t index) {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("layer " + std::to_string(index) + " (" +
                                std::string(layer_kind_name(l.kind)) +
                                "): " + why + ", input shape " + shape_str(in));
  };
  switch (l.kind) {
    case LayerKind::kDense:
      if (in.size() != 1 || in[0] != l.in)
        fail("expects [" + std::to_string(l.in) + "]");
      return {l.out};
    case LayerKind::kConv2d:
      if (in.size() != 3 || in[0] != l.in)
        fail("expects [" + std::to_string(l.in) + ",H,W]");
      if (in[1] < l.kx || in[2] < l.ky) fail("kernel larger than input");
      return {l.out, in[1] - l.kx + 1, in[2] - l.ky + 1};
    case LayerKind::kRelu:
      return in;
    case LayerKind::kFlatten:
      return {numel(in)};
  }
  return in;
}

class Model {
 public:
  Model() = default;
  Model(Shape input_shape, std::vector<Layer> layers)
      : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    output_shape();  // validates composition
  }

  const Shape& input_shape() const { return input_shape_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Shape output_shape() const {
    Shape s = input_shape_;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      s = layer_output_shape(layers_[i], s, i);
    return s;
  }

  std::vector<std::size_t> prunable_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].prunable()) idx.push_back(i);
    return idx;
  }

  /// Kaiming-like uniform weights, zero biases.
  void init(Rng& rng) {
    for (auto& l : layers_) {
      if (!l.prunable()) continue;
      l.weight = init_weights(l.weight.shape(), InitScheme::uniform(), rng);
      l.bias = Tensor(l.bias.shape(), 0.0);
    }
  }

  friend bool operator==(const Model& a, const Model& b) {
    if (a.input_shape_ != b.input_shape_ || a.layers_.size() != b.layers_.size())
      return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      const auto& x = a.layers_[i];
      const auto& y = b.layers_[i];
      if (x.kind != y.kind || x.weight != y.weight || x.bias != y.bias)
        return false;
    }
    return true;
  }

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
};

namespace detail {

inline Shape with_batch(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

inline Tensor dense_forward(const Layer& l, const Tensor& x) {
  const std::size_t n = x.shape()[0], I = l.in, O = l.out;
  Tensor y({n, O});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < O; ++o) {
      double acc = l.bias[o];
      for (std::size_t i = 0; i < I; ++i) acc += x[b * I + i] * l.weight[i * O + o];
      y[b * O + o] = acc;
    }
  return y;
}

inline Tensor conv_forward(const Layer& l, const Tensor& x) {
  const auto& xs = x.shape();
  const std::size_t n = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const std::size_t O = l.out, KX = l.kx, KY = l.ky;
  const std::size_t OH = H - KX + 1, OW = W - KY + 1;
  Tensor y({n, O, OH, OW});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t r = 0; r < OH; ++r)
        for (std::size_t q = 0; q < OW; ++q) {
          double acc = l.bias[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t a = 0; a < KX; ++a)
              for (std::size_t e = 0; e < KY; ++e)
                acc += x[((b * C + c) * H + r + a) * W + q + e] *
                       l.weight[((c * O + o) * KX + a) * KY + e];
          y[((b * O + o) * OH + r) * OW + q] = acc;
        }
  return y;
}

}  // namespace detail

/// Activations of every layer boundary; acts[0] is the input batch.
struct ForwardTrace {
  std::vector<Tensor> acts;
  const Tensor& logits() const { return acts.back(); }
};

inline ForwardTrace forward_trace(const Model& model, const Tensor& batch) {
  if (batch.rank() != model.input_shape().size() + 1 ||
      !std::equal(model.input_shape().begin(), model.input_shape().end(),
                  batch.shape().begin() + 1))
    throw std::invalid_argument("batch shape " + shape_str(batch.shape()) +
                                " does not match model input " +
                                shape_str(model.input_shape()));
  ForwardTrace tr;
  tr.acts.reserve(model.layers().size() + 1);
  tr.acts.push_back(batch);
  const std::size_t n = batch.shape()[0];
  Shape sample = model.input_shape();
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const auto& l = model.layers()[li];
    sample = layer_output_shape(l, sample, li);
    const Tensor& x = tr.acts.back();
    switch (l.kind) {
      case LayerKind::kDense:
        tr.acts.push_back(detail::dense_forward(l, x));
        break;
      case LayerKind::kConv2d:
        tr.acts.push_back(detail::conv_forward(l, x));
        break;
      case LayerKind::kRelu: {
        Tensor y = x;
        for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
        tr.acts.push_back(std::move(y));
        break;
      }
      case LayerKind::kFlatten:
        tr.acts.emplace_back(detail::with_batch(n, sample), x.values());
        break;
    }
  }
  return tr;
}

inline Tensor forward(const Model& model, const Tensor& batch) {
  return forward_trace(model, batch).logits();
}

struct Gradients {
  std::vector<Tensor> weight;  // empty tensors for parameter-free layers
  std::vector<Tensor> bias;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean softmax cross-entropy of logits [N, K].
inline double cross_entropy(const Tensor& logits,
                            const std::vector<int>& labels,
                            Tensor* dlogits = nullptr,
                            std::size_t* correct = nullptr) {
  const std::size_t n = logits.shape()[0], k = logits.shape()[1];
  if (labels.size() != n)
    throw std::invalid_argument("label count does not match batch size");
  if (dlogits) *dlogits = Tensor({n, k});
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::size_t b = 0; b < n; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw std::invalid_argument("label " + std::to_string(y) +
                                  " out of range");
    const double* z = &logits.data()[b * k];
    const double m = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - m);
    loss += std::log(sum) + m - z[y];
    std::size_t arg = static_cast<std::size_t>(std::max_element(z, z + k) - z);
    hits += (arg == static_cast<std::size_t>(y));
    if (dlogits)
      for (std::size_t j = 0; j < k; ++j)
        (*dlogits)[b * k + j] =
            (std::exp(z[j] - m) / sum - (j == static_cast<std::size_t>(y))) /
            static_cast<double>(n);
  }
  if (correct) *correct = hits;
  return loss / static_cast<double>(n);
}

/// Analytic gradients of the mean cross-entropy. Masks are not consulted:
/// pruned weights still receive gradient.
inline Gradients backward(const Model& model, const Tensor& batch,
                          const std::vector<int>& labels) {
  const auto tr = forward_trace(model, batch);
  const auto& layers = model.layers();
  Gradients g;
  g.weight.resize(layers.size());
  g.bias.resize(layers.size());

  Tensor dy;
  std::size_t correct = 0;
  g.loss = cross_entropy(tr.logits(), labels, &dy, &correct);
  g.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());

  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    const Tensor& x = tr.acts[li];
    Tensor dx(x.shape());
    switch (l.kind) {
      case LayerKind::kDense: {
        const std::size_t n = x.shape()[0], I = l.in, O = l.out;
        Tensor dw(l.weight.shape()), db(l.bias.shape());
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t o = 0; o < O; ++o) {
            const double d = dy[b * O + o];
            db[o] += d;
            for (std::size_t i = 0; i < I; ++i) {
              dw[i * O + o] += x[b * I + i] * d;
              dx[b * I + i] += l.weight[i * O + o] * d;
            }
          }
        g.weight[li] = std::move(dw);
        g.bias[li] = std::move(db);
        break;
      }
      case LayerKind::kConv2d: {
        const auto& xs = x.shape();
        const std::size_t n = xs[0], C = xs[1], H = xs[2], W = xs[3];
        const std::size_t O = l.out, KX = l.kx, KY = l.ky;
        const std::size_t OH = H - KX + 1, OW = W - KY + 1;
        Tensor dw(l.weight.shape()), db(l.bias.shape());
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t o = 0; o < O; ++o)
            for (std::size_t r = 0; r < OH; ++r)
              for (std::size_t q = 0; q < OW; ++q) {
                const double d = dy[((b * O + o) * OH + r) * OW + q];
                db[o] += d;
                for (std::size_t c = 0; c < C; ++c)
                  for (std::size_t a = 0; a < KX; ++a)
                    for (std::size_t e = 0; e < KY; ++e) {
                      const std::size_t xi = ((b * C + c) * H + r + a) * W + q + e;
                      const std::size_t wi = ((c * O + o) * KX + a) * KY + e;
                      dw[wi] += x[xi] * d;
                      dx[xi] += l.weight[wi] * d;
                    }
              }
        g.weight[li] = std::move(dw);
        g.bias[li] = std::move(db);
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < x.size(); ++i)
          dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
        break;
      case LayerKind::kFlatten:
        dx = Tensor(x.shape(), dy.values());
        break;
    }
    dy = std::move(dx);
  }
  return g;
}

/// SGD with heavy-ball momentum: v <- mu v + g; w <- w - lr v.
class Sgd {
 public:
  Sgd(double lr, double momentum = 0.0) : lr_(lr), momentum_(momentum) {}

  void step(Model& model, const Gradients& g) {
    auto& layers = model.layers();
    if (vel_w_.empty()) {
      vel_w_.resize(layers.size());
      vel_b_.resize(layers.size());
      for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].prunable()) {
          vel_w_[i] = Tensor(layers[i].weight.shape());
          vel_b_[i] = Tensor(layers[i].bias.shape());
        }
    }
    if (g.weight.size() != layers.size())
      throw std::invalid_argument("gradient list does not match model");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!layers[i].prunable()) continue;
      update(layers[i].weight, vel_w_[i], g.weight[i]);
      update(layers[i].bias, vel_b_[i], g.bias[i]);
    }
  }

  double learning_rate() const { return lr_; }

 private:
  void update(Tensor& w, Tensor& v, const Tensor& grad) {
    if (grad.shape() != w.shape())
      throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + grad[i];
      w[i] -= lr_ * v[i];
    }
  }

  double lr_;
  double momentum_;
  std::vector<Tensor> vel_w_, vel_b_;
};

}  // namespace sparsify
