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

#include "toma/reuse.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include "toma/errors.hpp"

namespace toma {

void ReuseSchedule::validate() const {
  if (weights_every < 1 || weights_every > dest_every || dest_every > total_steps) {
    throw InvalidArgument(
        "reuse schedule needs 1 <= weights_every <= dest_every <= total_steps (got " +
        std::to_string(weights_every) + ", " + std::to_string(dest_every) + ", " +
        std::to_string(total_steps) + ")");
  }
}

bool should_recompute(const ReuseSchedule& schedule, std::size_t step,
                      RecomputeTarget what) {
  const std::size_t every =
      what == RecomputeTarget::kDestinations ? schedule.dest_every : schedule.weights_every;
  return step % every == 0;
}

ReuseCache::ReuseCache(ReuseSchedule schedule, PartitionLayout layout, MergeConfig config,
                       ReuseOptions options)
    : schedule_(schedule),
      layout_(std::move(layout)),
      config_(config),
      options_(options) {
  schedule_.validate();
}

std::string ReuseCache::key_for(const std::string& layer, const std::string& group) const {
  return schedule_.share_across_layers ? "group:" + group : "layer:" + layer;
}

MergePlan ReuseCache::reweight(const TokenMatrix& item, const Entry& entry,
                               std::size_t b) const {
  if (!options_.freeze_destination_embeddings) {
    return replan_weights(item, layout_, entry.plans[b], config_.merge);
  }
  const auto parts = gather_regions(item, layout_);
  MergePlan plan(layout_.regions);
  for (std::size_t r = 0; r < layout_.regions; ++r) {
    plan[r] = attention_merge_weights(parts[r], entry.queries[b][r], entry.plans[b][r].dest,
                                      config_.merge);
  }
  return plan;
}

const std::vector<MergePlan>& ReuseCache::plan(const std::string& layer,
                                               const std::string& group, std::size_t step,
                                               const TokenMatrix& x) {
  if (step >= schedule_.total_steps) {
    throw InvalidArgument("step " + std::to_string(step) + " outside the schedule of " +
                          std::to_string(schedule_.total_steps) + " steps");
  }
  const std::string key = key_for(layer, group);
  auto found = entries_.find(key);
  const bool fresh = found == entries_.end();

  ReuseLogEntry event;
  event.step = step;
  event.cache_key = key;

  if (!fresh && (found->second.rows != x.rows() || found->second.cols != x.cols() ||
                 found->second.batch != x.batch())) {
    throw InvalidArgument("token shape changed within a reuse cache");
  }

  if (fresh || found->second.last_step != step) {
    const bool new_dest = fresh || should_recompute(schedule_, step, RecomputeTarget::kDestinations);
    const bool new_weights = new_dest || should_recompute(schedule_, step, RecomputeTarget::kWeights);
    Entry& entry = entries_[key];
    if (new_dest) {
      entry.plans.clear();
      entry.queries.clear();
      for (std::size_t b = 0; b < x.batch(); ++b) {
        const TokenMatrix item = x.batch() == 1 ? x : x.batch_item(b);
        entry.plans.push_back(plan_merge(item, layout_, config_.merge));
        std::vector<Matrix> queries;
        const auto parts = gather_regions(item, layout_);
        for (std::size_t r = 0; r < layout_.regions; ++r) {
          queries.push_back(gather_rows(parts[r], entry.plans.back()[r].dest.indices));
        }
        entry.queries.push_back(std::move(queries));
      }
    } else if (new_weights) {
      for (std::size_t b = 0; b < x.batch(); ++b) {
        const TokenMatrix item = x.batch() == 1 ? x : x.batch_item(b);
        entry.plans[b] = reweight(item, entry, b);
      }
    }
    entry.last_step = step;
    entry.rows = x.rows();
    entry.cols = x.cols();
    entry.batch = x.batch();
    event.recomputed_destinations = new_dest;
    event.recomputed_weights = new_weights;
    found = entries_.find(key);
  }

  for (const auto& plan : found->second.plans) {
    std::vector<std::vector<std::size_t>> per_region;
    for (std::size_t r = 0; r < plan.size(); ++r) {
      std::vector<std::size_t> flat;
      for (std::size_t local : plan[r].dest.indices) flat.push_back(layout_.members[r][local]);
      per_region.push_back(std::move(flat));
    }
    event.destinations.push_back(std::move(per_region));
  }
  log_.entries.push_back(std::move(event));
  return found->second.plans;
}

TokenMatrix ReuseCache::apply(const std::string& layer, const std::string& group,
                              std::size_t step, const TokenMatrix& x,
                              const CoreTransform& core) {
  const auto& plans = plan(layer, group, step, x);
  std::vector<TokenMatrix> outputs;
  for (std::size_t b = 0; b < x.batch(); ++b) {
    const TokenMatrix item = x.batch() == 1 ? x : x.batch_item(b);
    outputs.push_back(run_plan(item, layout_, plans[b], config_, core));
  }
  if (outputs.size() == 1) return std::move(outputs.front());
  return TokenMatrix::stack(outputs);
}

StepwiseResult stepwise_pipeline(const std::vector<TokenMatrix>& states,
                                 const PartitionLayout& layout, const MergeConfig& config,
                                 const ReuseSchedule& schedule, const CoreTransform& core,
                                 const ReuseOptions& options) {
  if (states.size() > schedule.total_steps) {
    throw InvalidArgument("schedule covers fewer steps than provided");
  }
  for (const auto& s : states) {
    if (s.rows() != states.front().rows() || s.cols() != states.front().cols()) {
      throw InvalidArgument("all step matrices must share N and d");
    }
  }
  ReuseCache cache(schedule, layout, config, options);
  StepwiseResult result;
  for (std::size_t t = 0; t < states.size(); ++t) {
    result.outputs.push_back(cache.apply("layer0", "default", t, states[t], core));
  }
  result.log = cache.log();
  return result;
}

double destination_overlap(const DestinationSet& a, const DestinationSet& b) {
  if (a.budget != b.budget) throw InvalidArgument("destination budgets differ");
  if (a.budget == 0) throw InvalidArgument("destination budget is zero");
  const std::unordered_set<std::size_t> lhs(a.indices.begin(), a.indices.end());
  std::size_t shared = 0;
  for (std::size_t j : b.indices) shared += lhs.count(j);
  return static_cast<double>(shared) / static_cast<double>(a.budget);
}

double plan_overlap(const MergePlan& a, const MergePlan& b) {
  if (a.size() != b.size()) throw InvalidArgument("plans cover different region counts");
  double shared = 0.0;
  double budget = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    shared += destination_overlap(a[r].dest, b[r].dest) * a[r].dest.budget;
    budget += a[r].dest.budget;
  }
  return budget > 0.0 ? shared / budget : 0.0;
}

}  // namespace toma
