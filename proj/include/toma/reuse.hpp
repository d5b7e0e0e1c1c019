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

// Cross-step reuse of destinations and merge weights.
//
// Destinations are recomputed every `dest_every` steps and weights every
// `weights_every` steps (step 0 always computes both, and a destination
// refresh always refreshes the weights). Between refreshes the cached
// destination indices are kept and their embeddings are re-gathered from the
// current step; cached weights are applied to the current tokens as-is.

#ifndef TOMA_REUSE_HPP_
#define TOMA_REUSE_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "toma/locality.hpp"
#include "toma/submodular.hpp"

namespace toma {

enum class RecomputeTarget { kDestinations, kWeights };

struct ReuseSchedule {
  std::size_t dest_every = 10;
  std::size_t weights_every = 5;
  std::size_t total_steps = 50;
  bool share_across_layers = true;

  // Throws unless 1 <= weights_every <= dest_every <= total_steps.
  void validate() const;
};

bool should_recompute(const ReuseSchedule& schedule, std::size_t step,
                      RecomputeTarget what);

struct ReuseLogEntry {
  std::size_t step = 0;
  std::string cache_key;
  bool recomputed_destinations = false;
  bool recomputed_weights = false;
  // destinations[b][r]: flat token indices of region r for batch item b.
  std::vector<std::vector<std::vector<std::size_t>>> destinations;
};

struct ReuseLog {
  std::vector<ReuseLogEntry> entries;
};

struct ReuseOptions {
  // Keep the destination embeddings from the selection step as merge
  // queries instead of re-gathering them from the current tokens.
  bool freeze_destination_embeddings = false;
};

// One cache per layer group (share_across_layers) or per layer.
class ReuseCache {
 public:
  ReuseCache(ReuseSchedule schedule, PartitionLayout layout, MergeConfig config,
             ReuseOptions options = {});

  // Plans for every batch item of x at `step`, refreshed per the schedule.
  // Layers of one group visiting the same step share one refresh.
  const std::vector<MergePlan>& plan(const std::string& layer, const std::string& group,
                                     std::size_t step, const TokenMatrix& x);

  // plan() followed by merge -> core -> unmerge.
  TokenMatrix apply(const std::string& layer, const std::string& group, std::size_t step,
                    const TokenMatrix& x, const CoreTransform& core);

  const ReuseLog& log() const { return log_; }
  const ReuseSchedule& schedule() const { return schedule_; }
  const PartitionLayout& layout() const { return layout_; }

 private:
  struct Entry {
    std::vector<MergePlan> plans;
    // queries[b][r]: destination embeddings captured at selection time.
    std::vector<std::vector<Matrix>> queries;
    std::size_t last_step = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t batch = 0;
  };

  std::string key_for(const std::string& layer, const std::string& group) const;
  MergePlan reweight(const TokenMatrix& item, const Entry& entry, std::size_t b) const;

  ReuseSchedule schedule_;
  PartitionLayout layout_;
  MergeConfig config_;
  ReuseOptions options_;
  std::map<std::string, Entry> entries_;
  ReuseLog log_;
};

struct StepwiseResult {
  std::vector<TokenMatrix> outputs;
  ReuseLog log;
};

// Runs one layer over a sequence of per-step token matrices.
StepwiseResult stepwise_pipeline(const std::vector<TokenMatrix>& states,
                                 const PartitionLayout& layout, const MergeConfig& config,
                                 const ReuseSchedule& schedule, const CoreTransform& core,
                                 const ReuseOptions& options = {});

// |a ∩ b| / budget. Throws on a budget mismatch.
double destination_overlap(const DestinationSet& a, const DestinationSet& b);

// Pooled overlap of two plans over the same layout: sum |a_r ∩ b_r| / sum budget_r.
double plan_overlap(const MergePlan& a, const MergePlan& b);

}  // namespace toma

#endif  // TOMA_REUSE_HPP_
