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

#include <algorithm>
#include <numeric>

#include "sparsify/criteria.hpp"

namespace sparsify {
namespace {

const Criterion kLargeFinal{CriterionKind::kLargeFinal};
const Criterion kMagInc{CriterionKind::kMagnitudeIncrease};
const Criterion kMovement{CriterionKind::kMovement};
const Criterion kRandom{CriterionKind::kRandom};

TEST(Score, LargeFinalIsAbsoluteValue) {
  Tensor wf({3}, {0.5, -2.0, 0.1});
  EXPECT_EQ(score(kLargeFinal, wf, nullptr, nullptr).values(),
            (std::vector<double>{0.5, 2.0, 0.1}));
}

TEST(Score, MagnitudeIncrease) {
  Tensor wf({1}, {0.5}), wi({1}, {0.2});
  EXPECT_NEAR(score(kMagInc, wf, &wi, nullptr)[0], 0.3, 1e-15);
}

TEST(Score, Movement) {
  Tensor wf({1}, {0.5}), wi({1}, {-0.2});
  EXPECT_NEAR(score(kMovement, wf, &wi, nullptr)[0], 0.7, 1e-15);
  Tensor same({3}, {1.0, -2.0, 3.0});
  EXPECT_EQ(score(kMovement, same, &same, nullptr).values(), std::vector<double>(3, 0.0));
}

TEST(Score, MissingInputsThrow) {
  Tensor wf({2}, {1, 2});
  EXPECT_THROW(score(kMovement, wf, nullptr, nullptr), std::invalid_argument);
  EXPECT_THROW(score(kMagInc, wf, nullptr, nullptr), std::invalid_argument);
  EXPECT_THROW(score(kRandom, wf, nullptr, nullptr), std::invalid_argument);
  Tensor wrong({3});
  EXPECT_THROW(score(kMovement, wf, &wrong, nullptr), std::invalid_argument);
}

TEST(Score, NamesRoundTrip) {
  for (auto name : {"random", "large_final", "magnitude_increase", "movement"})
    EXPECT_EQ(parse_criterion(name).name(), name);
  EXPECT_THROW(parse_criterion("taylor"), std::invalid_argument);
  EXPECT_TRUE(kMovement.needs_history());
  EXPECT_TRUE(kMagInc.needs_history());
  EXPECT_FALSE(kLargeFinal.needs_history());
  EXPECT_FALSE(kRandom.needs_history());
}

TEST(Score, SignsAndCompositionalIdentity) {
  Rng rng(4);
  Tensor wf({50}), wi({50});
  for (std::size_t i = 0; i < 50; ++i) {
    wf[i] = rng.normal();
    wi[i] = rng.normal();
  }
  auto lf = score(kLargeFinal, wf, nullptr, nullptr);
  auto lfi = score(kLargeFinal, wi, nullptr, nullptr);
  auto mi = score(kMagInc, wf, &wi, nullptr);
  auto mv = score(kMovement, wf, &wi, nullptr);
  bool any_negative = false;
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_GE(lf[i], 0.0);
    EXPECT_GE(mv[i], 0.0);
    EXPECT_EQ(mi[i], lf[i] - lfi[i]);
    any_negative |= mi[i] < 0.0;
  }
  EXPECT_TRUE(any_negative);
}

TEST(Score, RandomIsReproducibleAndIgnoresWeights) {
  Tensor a({20}, 1.0), b({20}, -5.0);
  Rng r1(10), r2(10);
  EXPECT_EQ(score(kRandom, a, nullptr, &r1), score(kRandom, b, nullptr, &r2));
}

TEST(UpdateHistory, CopiesLiveWeights) {
  Tensor w({3}, {1.0, 2.0, 3.0});
  WeightHistory h{Tensor({3}, 0.0), 0};
  h = update_history(h, w, 7);
  EXPECT_EQ(h.wi, w);
  EXPECT_EQ(h.initialized_at, 7u);
  EXPECT_EQ(score(kMovement, w, &h.wi, nullptr).values(), std::vector<double>(3, 0.0));
  auto again = update_history(h, w, 8);
  EXPECT_EQ(again.wi, h.wi);
  EXPECT_THROW(update_history(h, Tensor({4}), 9), std::invalid_argument);
}

}  // namespace
}  // namespace sparsify
