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
#include "sparsify/sparsifier.hpp"

namespace sparsify {
namespace {

std::vector<std::uint8_t> bits(const Mask& m) {
  return {m.bits().begin(), m.bits().end()};
}

TEST(PruneLayer, DenseLargeFinal) {
  Layer l = Layer::dense(2, 2);
  l.weight = Tensor({2, 2}, {1, 2, 3, 4});
  auto m = prune_layer(l, 50, "weight", {CriterionKind::kLargeFinal}, nullptr);
  EXPECT_EQ(bits(m), (std::vector<std::uint8_t>{0, 0, 1, 1}));
  EXPECT_EQ(l.weight.values(), (std::vector<double>{0, 0, 3, 4}));
}

TEST(PruneLayer, ZeroSparsityKeepsEverything) {
  Layer l = Layer::dense(3, 2);
  l.weight = Tensor({3, 2}, {5, -1, 2, 0.5, -3, 4});
  const Tensor before = l.weight;
  auto m = prune_layer(l, 0, "weight", {CriterionKind::kLargeFinal}, nullptr);
  EXPECT_EQ(sparsity_of(m), 0.0);
  EXPECT_EQ(l.weight, before);
}

TEST(PruneLayer, FilterOnConvZeroesOneInputSlice) {
  Layer l = Layer::conv2d(2, 2, 2, 2);
  Rng rng(4);
  for (std::size_t i = 0; i < 16; ++i) l.weight[i] = (i < 8 ? 3.0 : 1.0) * (1.0 + rng.uniform());
  auto m = prune_layer(l, 50, "filter", {CriterionKind::kLargeFinal}, nullptr);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(m[i], i < 8 ? 1 : 0) << i;
}

TEST(PruneLayer, RejectsNonPrunable) {
  Layer l = Layer::relu();
  EXPECT_THROW(prune_layer(l, 50, "weight", {}, nullptr), std::invalid_argument);
}

TEST(PruneModel, GlobalLandsInLowScoreLayer) {
  Model m({2}, {Layer::dense(2, 3), Layer::relu(), Layer::dense(3, 2)});
  m.layers()[0].weight = Tensor({2, 3}, {11, 12, 13, 14, 15, 16});
  m.layers()[2].weight = Tensor({3, 2}, {1, 2, 3, 4, 5, 6});
  SparsifyPlan plan;
  plan.sparsity = 50;
  plan.context = ContextSpec::global();
  Rng rng(0);
  auto masks = prune_model(m, plan, rng);
  EXPECT_EQ(sparsity_of(masks[0]), 0.0);
  EXPECT_EQ(sparsity_of(masks[1]), 1.0);
}

TEST(PruneModel, LocalHitsFloorQuantizedTargetPerLayer) {
  for (double s : {10.0, 33.0, 50.0, 90.0}) {
    Model m = oracle::convnet(6);
    Rng rng(7);
    m.init(rng);
    SparsifyPlan plan;
    plan.sparsity = s;
    plan.granularity = "row";
    auto masks = prune_model(m, plan, rng);
    const auto ids = m.prunable_indices();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& w = m.layers()[ids[k]].weight;
      auto part = enumerate_blocks(parse_granularity("row", w.rank()), w.shape());
      const auto nb = part.blocks.size();
      const auto pruned = static_cast<std::size_t>(std::floor(nb * s / 100.0 + 1e-9));
      EXPECT_EQ(pruned_blocks(masks[k], part), pruned) << "s=" << s << " layer " << k;
    }
  }
}

TEST(PruneModel, FullSparsityLeavesBiasOnlyNetwork) {
  Model m = oracle::mlp(4);
  Rng rng(2);
  m.init(rng);
  for (auto id : m.prunable_indices())
    for (auto& b : m.layers()[id].bias.data()) b = rng.normal();
  SparsifyPlan plan;
  plan.sparsity = 100;
  prune_model(m, plan, rng);
  Tensor x({3, 2}, {1, -2, 3, 0.5, -1, 4});
  auto y = forward(m, x);
  const auto& b = m.layers()[2].bias;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(y[r * 2 + c], b[c]);
}

TEST(PruneModel, PerLayerListLengthChecked) {
  Model m = oracle::mlp(4);
  SparsifyPlan plan;
  plan.context = ContextSpec::per_layer_list({10, 20, 30});
  Rng rng(0);
  EXPECT_THROW(prune_model(m, plan, rng), std::invalid_argument);
}

struct Run {
  Dataset data;
  Model model;
  TrainConfig cfg;
};

Run blobs_run(std::uint64_t seed, int epochs) {
  Rng rng(seed);
  Run r{make_dataset({DatasetKind::kBlobs2d, 200, 4.0}, rng), oracle::mlp(16), {}};
  r.model.init(rng);
  r.cfg.epochs = epochs;
  r.cfg.batch_size = 20;
  r.cfg.learning_rate = 0.1;
  r.cfg.seed = seed;
  return r;
}

// Verifies after every step that pruned positions hold exact zeros.
class ZeroChecker : public Callback {
 public:
  explicit ZeroChecker(const SparsifyCallback& cb) : cb_(cb) {}
  void on_step_end(TrainState& st) override {
    const auto& ids = cb_.layer_ids();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& w = st.model.layers()[ids[k]].weight;
      for (std::size_t i = 0; i < w.size(); ++i)
        if (cb_.masks()[k][i] == 0 && w[i] != 0.0) ++violations;
    }
    mask_sparsity.push_back(sparsity_of(cb_.masks()));
  }
  int violations = 0;
  std::vector<double> mask_sparsity;

 private:
  const SparsifyCallback& cb_;
};

TEST(Callback, PruningAtInitialization) {
  auto r = blobs_run(3, 3);
  SparsifyPlan plan;
  plan.sparsity = 75;
  plan.context = ContextSpec::global();
  SparsifyCallback cb(plan);
  ZeroChecker zc(cb);
  CallbackHooks hooks;
  hooks.subscribe(cb);
  hooks.subscribe(zc);
  auto res = fit(r.model, r.data, r.cfg, hooks);
  ASSERT_FALSE(cb.events().empty());
  EXPECT_EQ(cb.events().front().step, 0u);
  EXPECT_EQ(cb.events().front().sparsity, 48.0 / 64.0);
  EXPECT_EQ(zc.violations, 0);
  for (const auto& row : res.metrics) {
    EXPECT_EQ(row.model_sparsity, 75.0);
    EXPECT_EQ(row.target_sparsity, 75.0);
  }
}

TEST(Callback, GradualRampThenHold) {
  auto r = blobs_run(4, 10);
  SparsifyPlan plan;
  plan.sparsity = 50;
  plan.schedule.kind = ScheduleKind::kGradual;
  plan.schedule.end_epoch = 6;
  SparsifyCallback cb(plan);
  ZeroChecker zc(cb);
  CallbackHooks hooks;
  hooks.subscribe(cb);
  hooks.subscribe(zc);
  auto res = fit(r.model, r.data, r.cfg, hooks);
  EXPECT_EQ(zc.violations, 0);
  const std::uint64_t spe = 10;
  for (std::size_t i = 1; i < res.metrics.size(); ++i) {
    EXPECT_GE(res.metrics[i].model_sparsity, res.metrics[i - 1].model_sparsity);
    if (res.metrics[i - 1].step >= 6 * spe) {
      EXPECT_EQ(zc.mask_sparsity[i], zc.mask_sparsity[i - 1]);
    }
  }
  EXPECT_NEAR(res.metrics.back().model_sparsity, 50.0, 100.0 / 32.0);
  EXPECT_EQ(cb.events().size(), 7u);
}

TEST(Callback, TargetColumnMatchesScheduleAtLastUpdate) {
  auto r = blobs_run(5, 6);
  SparsifyPlan plan;
  plan.sparsity = 60;
  plan.schedule.kind = ScheduleKind::kOneCycle;
  plan.schedule.start_epoch = 1;
  plan.schedule.update_frequency = 3;
  SparsifyCallback cb(plan);
  CallbackHooks hooks;
  hooks.subscribe(cb);
  auto res = fit(r.model, r.data, r.cfg, hooks);
  ProgressClock clock{0, 10, 6};
  for (const auto& row : res.metrics) {
    auto u = last_update_step(row.step, clock, plan.schedule);
    double expected = 0.0;
    if (u) {
      clock.current_step = *u;
      expected = current_target(clock, plan.schedule, 60.0);
    }
    EXPECT_EQ(row.target_sparsity, expected) << "step " << row.step;
  }
}

TEST(Callback, PlanMismatchDetectedAtTrainBegin) {
  auto r = blobs_run(1, 3);
  SparsifyPlan plan;
  plan.granularity = "kernel";  // needs rank-4 weights
  SparsifyCallback cb(plan);
  CallbackHooks hooks;
  hooks.subscribe(cb);
  EXPECT_THROW(fit(r.model, r.data, r.cfg, hooks), TrainingAborted);

  SparsifyPlan late;
  late.schedule.start_epoch = 5;
  SparsifyCallback cb2(late);
  CallbackHooks hooks2;
  hooks2.subscribe(cb2);
  EXPECT_THROW(fit(r.model, r.data, r.cfg, hooks2), TrainingAborted);
}

// Copies the model (with the callback's current masks applied) at each update
// boundary, before the callback recomputes masks.
class BoundaryRecorder : public Callback {
 public:
  BoundaryRecorder(const SparsifyCallback& cb, const ScheduleSpec& spec)
      : cb_(cb), spec_(spec) {}
  void on_step_end(TrainState& st) override {
    if (!is_update_step(st.clock.current_step, st.clock, spec_)) return;
    Model copy = st.model;
    const auto& ids = cb_.layer_ids();
    for (std::size_t k = 0; k < ids.size(); ++k)
      apply_mask_inplace(copy.layers()[ids[k]].weight, cb_.masks()[k]);
    snapshots.push_back(std::move(copy));
  }
  std::vector<Model> snapshots;

 private:
  const SparsifyCallback& cb_;
  ScheduleSpec spec_;
};

TEST(Callback, OneShotAtLastEpochMatchesStaticSparsifier) {
  for (auto kind : {CriterionKind::kLargeFinal, CriterionKind::kRandom}) {
    auto r = blobs_run(6, 5);
    SparsifyPlan plan;
    plan.sparsity = 40;
    plan.context = ContextSpec::global();
    plan.criterion = {kind};
    plan.schedule.start_epoch = 4;
    plan.seed = 99;
    SparsifyCallback cb(plan);
    BoundaryRecorder rec(cb, plan.schedule);
    CallbackHooks hooks;
    hooks.subscribe(rec);
    hooks.subscribe(cb);
    fit(r.model, r.data, r.cfg, hooks);
    ASSERT_EQ(rec.snapshots.size(), 2u);
    ASSERT_EQ(cb.events().size(), 2u);
    // Replay both updates through one static sparsifier so the rng advances
    // exactly as inside the callback.
    Rng rng(plan.seed);
    for (std::size_t e = 0; e < 2; ++e) {
      Model m = rec.snapshots[e];
      auto masks = prune_model(m, plan, rng);
      ASSERT_EQ(masks.size(), cb.events()[e].masks.size());
      for (std::size_t k = 0; k < masks.size(); ++k)
        EXPECT_EQ(masks[k], cb.events()[e].masks[k]) << "event " << e;
    }
  }
}

TEST(Callback, ResetEndRestoresSnapshotTimesMask) {
  auto r = blobs_run(8, 4);
  const Model w0 = r.model;
  SparsifyPlan plan;
  plan.sparsity = 50;
  plan.schedule.kind = ScheduleKind::kGradual;
  plan.reset_end = true;
  SparsifyCallback cb(plan);
  CallbackHooks hooks;
  hooks.subscribe(cb);
  fit(r.model, r.data, r.cfg, hooks);
  Model expected = w0;
  const auto& ids = cb.layer_ids();
  for (std::size_t k = 0; k < ids.size(); ++k)
    apply_mask_inplace(expected.layers()[ids[k]].weight, cb.masks()[k]);
  EXPECT_EQ(r.model, expected);
}

SparsifyPlan classic_lth() {
  SparsifyPlan plan;
  plan.sparsity = 80;
  plan.granularity = "weight";
  plan.context = ContextSpec::global();
  plan.criterion = {CriterionKind::kLargeFinal};
  plan.schedule.kind = ScheduleKind::kIterative;
  plan.schedule.n_steps = 4;
  plan.lth = true;
  plan.save_tickets = true;
  return plan;
}

bool masked_equal(const Model& a, const Model& snapshot, const std::vector<Mask>& masks,
                  const std::vector<std::size_t>& ids) {
  Model expected = snapshot;
  for (std::size_t k = 0; k < ids.size(); ++k)
    apply_mask_inplace(expected.layers()[ids[k]].weight, masks[k]);
  for (std::size_t k = 0; k < ids.size(); ++k)
    if (!(a.layers()[ids[k]].weight == expected.layers()[ids[k]].weight)) return false;
  return true;
}

TEST(Lth, ClassicRoundsRewindAndNest) {
  auto r = blobs_run(9, 8);
  const Model w0 = r.model;
  auto res = run_lth(r.model, r.data, r.cfg, classic_lth());
  ASSERT_EQ(res.tickets.size(), 4u);
  ASSERT_TRUE(res.state.rewind_snapshot);
  EXPECT_EQ(*res.state.rewind_snapshot, w0);
  const auto ids = w0.prunable_indices();
  const double quantum = 1.0 / 64.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& t = res.tickets[k];
    EXPECT_EQ(t.round, static_cast<int>(k + 1));
    EXPECT_EQ(t.target, 20.0 * static_cast<double>(k + 1));
    EXPECT_NEAR(t.sparsity, 0.2 * static_cast<double>(k + 1), quantum);
    EXPECT_TRUE(masked_equal(t.weights, w0, t.masks, ids)) << "ticket " << k;
    ASSERT_TRUE(t.accuracy);
    if (k > 0) {
      const auto& prev = res.tickets[k - 1].masks;
      for (std::size_t l = 0; l < prev.size(); ++l)
        for (std::size_t i = 0; i < prev[l].size(); ++i)
          if (prev[l][i] == 0) {
            EXPECT_EQ(t.masks[l][i], 0) << "round " << k;
          }
    }
  }
}

TEST(Lth, RewindEpochOneSnapshotsTrainedWeights) {
  auto r = blobs_run(10, 8);
  const Model w0 = r.model;
  auto plan = classic_lth();
  plan.rewind_epoch = 1;
  plan.schedule.start_epoch = 1;
  auto res = run_lth(r.model, r.data, r.cfg, plan);
  ASSERT_TRUE(res.state.rewind_snapshot);
  EXPECT_FALSE(*res.state.rewind_snapshot == w0);
  for (const auto& t : res.tickets)
    EXPECT_TRUE(masked_equal(t.weights, *res.state.rewind_snapshot, t.masks,
                             w0.prunable_indices()));
}

TEST(Lth, RejectsRewindAfterWindowStart) {
  auto r = blobs_run(11, 4);
  auto plan = classic_lth();
  plan.rewind_epoch = 2;
  plan.schedule.start_epoch = 1;
  EXPECT_THROW(run_lth(r.model, r.data, r.cfg, plan), std::invalid_argument);
  plan.lth = false;
  EXPECT_THROW(run_lth(r.model, r.data, r.cfg, plan), std::invalid_argument);
}

}  // namespace
}  // namespace sparsify
