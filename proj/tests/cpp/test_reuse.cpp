// Copyright 2026 The Authors.
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
#include <random>

#include "test_util.hpp"
#include "toma/errors.hpp"
#include "toma/locality.hpp"
#include "toma/reuse.hpp"
#include "toma/synth.hpp"

namespace toma {
namespace {

CoreTransform identity_core() {
  return [](const TokenMatrix& m) { return m; };
}

ReuseSchedule schedule(std::size_t dest, std::size_t weights, std::size_t total) {
  ReuseSchedule s;
  s.dest_every = dest;
  s.weights_every = weights;
  s.total_steps = total;
  return s;
}

std::vector<TokenMatrix> drifting(double drift, std::uint64_t seed, std::size_t steps) {
  SynthConfig sc;
  sc.grid = {16, 16};
  sc.d = 16;
  sc.drift = drift;
  sc.steps = steps;
  sc.seed = seed;
  return drift_sequence(sc);
}

PartitionLayout tiles() { return make_layout(LayoutKind::kTile, 256, Grid{16, 16}, 4, 128); }

TEST(ShouldRecompute, Examples) {
  const auto s = schedule(10, 5, 50);
  EXPECT_TRUE(should_recompute(s, 0, RecomputeTarget::kDestinations));
  EXPECT_FALSE(should_recompute(s, 7, RecomputeTarget::kDestinations));
  EXPECT_TRUE(should_recompute(s, 10, RecomputeTarget::kDestinations));
  EXPECT_TRUE(should_recompute(s, 5, RecomputeTarget::kWeights));
  const auto every = schedule(1, 1, 5);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_TRUE(should_recompute(every, t, RecomputeTarget::kDestinations));
}

TEST(ShouldRecompute, ScheduleValidation) {
  EXPECT_NO_THROW(schedule(10, 5, 50).validate());
  EXPECT_THROW(schedule(5, 10, 50).validate(), InvalidArgument);
  EXPECT_THROW(schedule(0, 0, 50).validate(), InvalidArgument);
  EXPECT_THROW(schedule(60, 5, 50).validate(), InvalidArgument);
}

TEST(Stepwise, FrozenStatesAreScheduleIndependent) {
  const auto states = drifting(0.0, 1, 10);
  const auto base = stepwise_pipeline(states, tiles(), MergeConfig{}, schedule(1, 1, 10), identity_core());
  for (auto [d, w] : {std::pair<std::size_t, std::size_t>{10, 5}, {3, 3}, {5, 2}}) {
    const auto out = stepwise_pipeline(states, tiles(), MergeConfig{}, schedule(d, w, 10), identity_core());
    for (std::size_t t = 0; t < states.size(); ++t)
      EXPECT_LE(testing::max_abs_diff(out.outputs[t], base.outputs[t]), 1e-6);
  }
}

TEST(Stepwise, EveryStepEqualsIndependentRuns) {
  const auto states = drifting(0.3, 2, 5);
  const auto out = stepwise_pipeline(states, tiles(), MergeConfig{}, schedule(1, 1, 5), identity_core());
  for (std::size_t t = 0; t < states.size(); ++t)
    EXPECT_EQ(out.outputs[t], local_pipeline(states[t], tiles(), MergeConfig{}, identity_core()));
}

TEST(Stepwise, LogRecordsRefreshes) {
  const auto states = drifting(0.1, 3, 12);
  const auto out = stepwise_pipeline(states, tiles(), MergeConfig{}, schedule(6, 3, 12), identity_core());
  ASSERT_EQ(out.log.entries.size(), 12u);
  for (std::size_t t = 0; t < 12; ++t) {
    const auto& e = out.log.entries[t];
    EXPECT_EQ(e.step, t);
    EXPECT_EQ(e.cache_key, "group:default");
    EXPECT_EQ(e.recomputed_destinations, t % 6 == 0);
    EXPECT_EQ(e.recomputed_weights, t % 3 == 0);
    ASSERT_EQ(e.destinations.size(), 1u);
    ASSERT_EQ(e.destinations[0].size(), 4u);
    EXPECT_EQ(e.destinations[0][0].size(), 32u);
    if (!e.recomputed_destinations) EXPECT_EQ(e.destinations, out.log.entries[t - 1].destinations);
  }
}

TEST(Stepwise, DriftMakesStaleDestinationsWorse) {
  double stale = 0.0, fresh = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto states = drifting(0.3, 10 + seed, 10);
    const auto a = stepwise_pipeline(states, tiles(), MergeConfig{}, schedule(10, 10, 10), identity_core());
    const auto b = stepwise_pipeline(states, tiles(), MergeConfig{}, schedule(1, 1, 10), identity_core());
    for (std::size_t t = 0; t < states.size(); ++t) {
      const double ea = testing::relative_error(a.outputs[t], states[t]);
      const double eb = testing::relative_error(b.outputs[t], states[t]);
      stale += ea * ea;
      fresh += eb * eb;
    }
  }
  EXPECT_GE(stale, fresh);
}

TEST(Stepwise, FrozenEmbeddingsOnlyMatterUnderDrift) {
  ReuseOptions frozen;
  frozen.freeze_destination_embeddings = true;
  const auto still = drifting(0.0, 4, 6);
  const auto a = stepwise_pipeline(still, tiles(), MergeConfig{}, schedule(6, 2, 6), identity_core(), frozen);
  const auto b = stepwise_pipeline(still, tiles(), MergeConfig{}, schedule(6, 2, 6), identity_core());
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(a.outputs[t], b.outputs[t]);

  const auto moving = drifting(0.5, 4, 6);
  const auto c = stepwise_pipeline(moving, tiles(), MergeConfig{}, schedule(6, 2, 6), identity_core(), frozen);
  const auto d = stepwise_pipeline(moving, tiles(), MergeConfig{}, schedule(6, 2, 6), identity_core());
  EXPECT_EQ(c.outputs[0], d.outputs[0]);
  EXPECT_NE(c.outputs[2], d.outputs[2]);
}

TEST(ReuseCache, LayersInOneGroupShareARefresh) {
  const auto states = drifting(0.2, 5, 4);
  ReuseCache cache(schedule(2, 1, 4), tiles(), MergeConfig{});
  for (std::size_t t = 0; t < 4; ++t) {
    cache.plan("down.0", "down", t, states[t]);
    cache.plan("down.1", "down", t, states[t]);
  }
  const auto& log = cache.log().entries;
  ASSERT_EQ(log.size(), 8u);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(log[2 * t].cache_key, "group:down");
    EXPECT_TRUE(log[2 * t].recomputed_weights);
    EXPECT_FALSE(log[2 * t + 1].recomputed_weights);
    EXPECT_FALSE(log[2 * t + 1].recomputed_destinations);
    EXPECT_EQ(log[2 * t].destinations, log[2 * t + 1].destinations);
  }
}

TEST(ReuseCache, PerLayerCachesWhenNotShared) {
  const auto states = drifting(0.2, 6, 2);
  auto s = schedule(2, 1, 2);
  s.share_across_layers = false;
  ReuseCache cache(s, tiles(), MergeConfig{});
  cache.plan("a", "g", 0, states[0]);
  cache.plan("b", "g", 0, states[0]);
  EXPECT_EQ(cache.log().entries[0].cache_key, "layer:a");
  EXPECT_EQ(cache.log().entries[1].cache_key, "layer:b");
  EXPECT_TRUE(cache.log().entries[1].recomputed_destinations);
}

TEST(ReuseCache, ShapeChangesAndRangeAreErrors) {
  const auto states = drifting(0.2, 7, 2);
  ReuseCache cache(schedule(2, 1, 2), tiles(), MergeConfig{});
  cache.plan("a", "g", 0, states[0]);
  EXPECT_THROW(cache.plan("a", "g", 2, states[1]), InvalidArgument);
  EXPECT_THROW(stepwise_pipeline(drifting(0.2, 7, 3), tiles(), MergeConfig{}, schedule(2, 1, 2), identity_core()),
               InvalidArgument);
}

TEST(Overlap, Examples) {
  EXPECT_DOUBLE_EQ(destination_overlap({{1, 2}, 2}, {{2, 1}, 2}), 1.0);
  EXPECT_DOUBLE_EQ(destination_overlap({{1, 2}, 2}, {{3, 4}, 2}), 0.0);
  EXPECT_DOUBLE_EQ(destination_overlap({{1, 2}, 2}, {{2, 3}, 2}), 0.5);
  EXPECT_THROW(destination_overlap({{1, 2}, 2}, {{1}, 1}), InvalidArgument);
}

TEST(Overlap, BoundsAndSymmetry) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> pool(20);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    DestinationSet a{{pool.begin(), pool.begin() + 6}, 6};
    std::shuffle(pool.begin(), pool.end(), rng);
    DestinationSet b{{pool.begin(), pool.begin() + 6}, 6};
    const double ab = destination_overlap(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_DOUBLE_EQ(ab, destination_overlap(b, a));
    EXPECT_DOUBLE_EQ(destination_overlap(a, a), 1.0);
    std::sort(a.indices.begin(), a.indices.end());
    std::sort(b.indices.begin(), b.indices.end());
    EXPECT_EQ(ab == 1.0, a.indices == b.indices);
  }
}

TEST(Overlap, DecaysWithStepDistance) {
  std::vector<double> near, far;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto states = drifting(0.15, 40 + seed, 8);
    const auto start = plan_merge(states[0], tiles(), MergeOptions{});
    near.push_back(plan_overlap(start, plan_merge(states[1], tiles(), MergeOptions{})));
    far.push_back(plan_overlap(start, plan_merge(states[7], tiles(), MergeOptions{})));
  }
  EXPECT_GT(std::accumulate(near.begin(), near.end(), 0.0), std::accumulate(far.begin(), far.end(), 0.0));
}

}  // namespace
}  // namespace toma
