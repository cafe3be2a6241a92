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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sparsify/train.hpp"

namespace sparsify {
namespace {

Tensor random_batch(const Shape& shape, Rng& rng) {
  Tensor x(shape);
  for (auto& v : x.data()) v = rng.normal();
  return x;
}

TEST(Forward, IdentityDense) {
  Model m({3}, {Layer::dense(3, 3)});
  auto& w = m.layers()[0].weight;
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  Tensor x({2, 3}, {1, 2, 3, -4, 5, -6});
  EXPECT_EQ(forward(m, x), x);
}

TEST(Forward, ConvAllOnes) {
  Model m({1, 3, 3}, {Layer::conv2d(1, 1, 2, 2)});
  m.layers()[0].weight = Tensor({1, 1, 2, 2}, 1.0);
  auto y = forward(m, Tensor({1, 1, 3, 3}, 1.0));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.values(), std::vector<double>(4, 4.0));
}

TEST(Forward, ConvUsesInputMajorLayout) {
  // Two input channels, one output channel: W[i, 0, :, :] weights channel i.
  Model m({2, 2, 2}, {Layer::conv2d(2, 1, 1, 1)});
  m.layers()[0].weight = Tensor({2, 1, 1, 1}, {1.0, 10.0});
  Tensor x({1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_EQ(forward(m, x).values(), (std::vector<double>{51, 62, 73, 84}));
}

TEST(Forward, Relu) {
  Model m({2}, {Layer::relu()});
  EXPECT_EQ(forward(m, Tensor({1, 2}, {-1.0, 2.0})).values(), (std::vector<double>{0.0, 2.0}));
}

TEST(Forward, ShapeErrors) {
  EXPECT_THROW(Model({3}, {Layer::dense(2, 2)}), std::invalid_argument);
  EXPECT_THROW(Model({1, 2, 2}, {Layer::conv2d(1, 1, 3, 3)}), std::invalid_argument);
  Model m = oracle::mlp();
  EXPECT_THROW(forward(m, Tensor({4, 3})), std::invalid_argument);
}

TEST(Backward, BalancedZeroModelHasZeroBiasGradient) {
  Model m = oracle::mlp(4);
  Tensor x({4, 2}, {1, 2, -1, 0.5, 3, -2, 0, 1});
  auto g = backward(m, x, {0, 1, 0, 1});
  EXPECT_NEAR(g.bias[2][0], 0.0, 1e-15);
  EXPECT_NEAR(g.bias[2][1], 0.0, 1e-15);
}

TEST(Backward, MaskedWeightStillGetsGradient) {
  // logits = [w0 * x, w1 * x] with x = 1, w0 = 1, w1 masked to 0, label 0.
  // dL/dw1 = softmax(z)_1 = 1 / (e + 1).
  Model m({1}, {Layer::dense(1, 2)});
  m.layers()[0].weight = Tensor({1, 2}, {1.0, 0.0});
  auto g = backward(m, Tensor({1, 1}, {1.0}), {0});
  EXPECT_NEAR(g.weight[0][1], 1.0 / (std::exp(1.0) + 1.0), 1e-15);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    for (int arch = 0; arch < 2; ++arch) {
      Model m = arch == 0 ? oracle::mlp(5) : oracle::convnet(5);
      m.init(rng);
      for (auto& l : m.layers())
        if (l.prunable())
          for (auto& v : l.bias.data()) v = 0.1 * rng.normal();
      Shape xs = arch == 0 ? Shape{4, 2} : Shape{3, 1, 5, 5};
      Tensor x = random_batch(xs, rng);
      std::vector<int> y;
      for (std::size_t i = 0; i < xs[0]; ++i) y.push_back(static_cast<int>(rng.below(2)));
      auto a = backward(m, x, y);
      auto n = oracle::finite_difference(m, x, y, 1e-5);
      EXPECT_LT(oracle::max_relative_error(a, n), 1e-5) << "seed " << seed << " arch " << arch;
    }
  }
}

TEST(Sgd, Arithmetic) {
  Model m({1}, {Layer::dense(1, 1)});
  m.layers()[0].weight[0] = 1.0;
  Gradients g;
  g.weight = {Tensor({1, 1}, 2.0)};
  g.bias = {Tensor({1}, 0.0)};
  Sgd(0.1).step(m, g);
  EXPECT_DOUBLE_EQ(m.layers()[0].weight[0], 0.8);

  Model frozen = m;
  Sgd zero_lr(0.0);
  zero_lr.step(frozen, g);
  EXPECT_EQ(frozen, m);

  Model mm({1}, {Layer::dense(1, 1)});
  Sgd mom(0.1, 0.9);
  mom.step(mm, g);
  const double first = -mm.layers()[0].weight[0];
  mom.step(mm, g);
  const double second = -mm.layers()[0].weight[0] - first;
  EXPECT_NEAR(second / first, 1.9, 1e-12);
}

TEST(Datasets, BlobsAreSeparableForAlmostAllSeeds) {
  int separable = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    separable += oracle::perceptron_separates(make_dataset({DatasetKind::kBlobs2d, 200, 4.0}, rng));
  }
  EXPECT_GE(separable, 99);
}

TEST(Datasets, BalancedAndDeterministic) {
  for (auto kind : {DatasetKind::kBlobs2d, DatasetKind::kPatterns8x8}) {
    for (std::size_t n : {2u, 7u, 64u}) {
      Rng a(1), b(1);
      auto d = make_dataset({kind, n}, a);
      auto e = make_dataset({kind, n}, b);
      EXPECT_EQ(d.inputs, e.inputs);
      long ones = 0;
      for (int y : d.labels) ones += y;
      EXPECT_LE(std::abs(2 * ones - static_cast<long>(n)), 1);
    }
  }
  Rng rng(0);
  EXPECT_THROW(make_dataset({DatasetKind::kBlobs2d, 1}, rng), std::invalid_argument);
}

TEST(Datasets, BarTemplatesDifferAcrossClasses) {
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      auto h = bar_template(0, r), v = bar_template(1, c);
      int diff = 0;
      for (std::size_t p = 0; p < 64; ++p) diff += h[p] != v[p];
      EXPECT_GE(diff, 8);
    }
}

struct Fixture {
  Dataset data;
  Model model;
  TrainConfig cfg;
};

Fixture blobs_fixture(std::uint64_t seed, int epochs) {
  Rng rng(seed);
  Fixture f{make_dataset({DatasetKind::kBlobs2d, 200, 4.0}, rng), oracle::mlp(16), {}};
  f.model.init(rng);
  f.cfg.epochs = epochs;
  f.cfg.batch_size = 20;
  f.cfg.learning_rate = 0.1;
  f.cfg.seed = seed;
  return f;
}

TEST(Fit, LearnsSeparableBlobs) {
  auto f = blobs_fixture(1, 30);
  auto r = fit(f.model, f.data, f.cfg);
  EXPECT_GE(r.final_eval.accuracy, 0.95);
  ASSERT_EQ(r.epochs.size(), 30u);
  for (int e = 1; e < 5; ++e) EXPECT_LT(r.epochs[e].loss, r.epochs[e - 1].loss);
}

class CountingCallback : public Callback {
 public:
  void on_train_begin(TrainState&) override { trace.push_back('T'); }
  void on_epoch_begin(TrainState&) override { trace.push_back('E'); }
  void on_step_end(TrainState&) override {
    trace.push_back('s');
    ++steps;
  }
  void on_epoch_end(TrainState&) override { trace.push_back('e'); }
  void on_train_end(TrainState&) override { trace.push_back('t'); }
  std::string trace;
  int steps = 0;
};

TEST(Fit, HookCountsAndOrder) {
  auto f = blobs_fixture(2, 3);
  f.data.labels.pop_back();  // 199 samples -> ceil(199/20) = 10 steps
  f.data.inputs = Tensor({199, 2}, std::vector<double>(f.data.inputs.values().begin(),
                                                       f.data.inputs.values().end() - 2));
  CountingCallback cb;
  CallbackHooks hooks;
  hooks.subscribe(cb);
  std::string order;
  hooks.on_step_end.push_back([&](TrainState&) { order += cb.trace.back(); });
  auto r = fit(f.model, f.data, f.cfg, hooks);
  EXPECT_EQ(cb.steps, 3 * 10);
  EXPECT_EQ(r.metrics.size(), 30u);
  std::string expected = "T";
  for (int e = 0; e < 3; ++e) expected += "E" + std::string(10, 's') + "e";
  expected += "t";
  EXPECT_EQ(cb.trace, expected);
  EXPECT_EQ(order, std::string(30, 's'));  // second subscriber sees first one's effect
}

TEST(Fit, SameSeedBitIdentical) {
  auto a = blobs_fixture(5, 4), b = blobs_fixture(5, 4);
  fit(a.model, a.data, a.cfg);
  fit(b.model, b.data, b.cfg);
  EXPECT_EQ(a.model, b.model);
}

TEST(Fit, FailingHookAbortsWithState) {
  auto f = blobs_fixture(3, 5);
  CallbackHooks hooks;
  hooks.on_step_end.push_back([](TrainState& s) {
    if (s.clock.current_step == 13) throw std::runtime_error("boom");
  });
  try {
    fit(f.model, f.data, f.cfg, hooks);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
    EXPECT_EQ(e.partial.metrics.size(), 12u);
    EXPECT_EQ(e.model, f.model);
  }
}

TEST(Fit, InvalidConfig) {
  auto f = blobs_fixture(3, 0);
  EXPECT_THROW(fit(f.model, f.data, f.cfg), std::invalid_argument);
}

}  // namespace
}  // namespace sparsify
