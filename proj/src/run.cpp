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

#include <algorithm>
#include <cmath>

#include "toma/errors.hpp"
#include "toma/parallel.hpp"
#include "toma/report.hpp"
#include "toma/submodular.hpp"

namespace toma {
namespace {

double relative_mse(const TokenMatrix& y, const TokenMatrix& x) {
  const double denom = frobenius_norm(x);
  const double err = frobenius_distance(y, x);
  return denom > 0.0 ? (err * err) / (denom * denom) : err * err;
}

CoreTransform make_core(const std::string& name) {
  if (name == "identity") return [](const TokenMatrix& m) { return m; };
  throw InvalidArgument("unknown core '" + name + "' (expected identity)");
}

double mean_roundtrip(const std::vector<TokenMatrix>& states,
                      const std::vector<TokenMatrix>& outputs) {
  double total = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t) total += relative_mse(outputs[t], states[t]);
  return total / static_cast<double>(states.size());
}

}  // namespace

RunReport execute_run(const std::vector<TokenMatrix>& states, const RunOptions& options) {
  if (states.empty()) throw InvalidArgument("at least one input step is required");
  const TokenMatrix& first = states.front();
  for (const auto& s : states) {
    if (s.rows() != first.rows() || s.cols() != first.cols() || s.batch() != first.batch()) {
      throw InvalidArgument("all input steps must share B, N and d");
    }
  }
  if (!(options.ratio > 0.0 && options.ratio <= 1.0)) {
    throw InvalidArgument("ratio must lie in (0, 1]");
  }
  if (options.deterministic) set_num_threads(1);

  const std::size_t n = first.rows();
  const auto kept = static_cast<std::size_t>(std::llround(options.ratio * static_cast<double>(n)));
  if (kept < 1) throw InvalidArgument("ratio keeps no tokens");

  const PartitionLayout layout =
      make_layout(options.layout, n, first.grid(), options.regions, kept);
  ReuseSchedule schedule;
  schedule.dest_every = options.dest_every;
  schedule.weights_every = options.weights_every;
  schedule.total_steps = std::max({states.size(), options.dest_every, options.weights_every});
  schedule.validate();
  const CoreTransform core = make_core(options.core);
  ReuseOptions reuse_options;
  reuse_options.freeze_destination_embeddings = options.freeze_destinations;

  RunReport report;
  report.options = options;
  report.steps = states.size();
  report.batch = first.batch();
  report.n = n;
  report.d = first.cols();
  report.destinations = kept;

  const StepwiseResult main_run =
      stepwise_pipeline(states, layout, options.config, schedule, core, reuse_options);
  report.reuse_log = main_run.log;
  report.metrics.roundtrip_rel_mse = mean_roundtrip(states, main_run.outputs);

  // Step 0 always selects fresh, so its plan is plan_merge of the first step.
  const TokenMatrix item0 = first.batch() == 1 ? first : first.batch_item(0);
  const auto parts = gather_regions(item0, layout);
  const MergePlan plan0 = plan_merge(item0, layout, options.config.merge);
  double eps_sum = 0.0;
  for (std::size_t r = 0; r < layout.regions; ++r) {
    report.metrics.facility_location +=
        facility_location_value(cosine_similarity(parts[r]), plan0[r].dest);
    const double eps = ortho_diagnostics(plan0[r]).eps_fro;
    eps_sum += eps;
    report.metrics.eps_fro_max = std::max(report.metrics.eps_fro_max, eps);
  }
  report.metrics.facility_location_per_token =
      report.metrics.facility_location / static_cast<double>(n);
  report.metrics.eps_fro = eps_sum / static_cast<double>(layout.regions);

  if (options.compare_unmerge) {
    for (UnmergeMode mode : {UnmergeMode::kTranspose, UnmergeMode::kPinv}) {
      MergeConfig cfg = options.config;
      cfg.unmerge = mode;
      const StepwiseResult result =
          stepwise_pipeline(states, layout, cfg, schedule, core, reuse_options);
      const double mse = mean_roundtrip(states, result.outputs);
      if (mode == UnmergeMode::kTranspose) {
        report.metrics.roundtrip_rel_mse_transpose = mse;
      } else {
        report.metrics.roundtrip_rel_mse_pinv = mse;
      }
    }
  }

  if (states.size() > 1) {
    std::vector<MergePlan> fresh;
    for (const auto& s : states) {
      fresh.push_back(plan_merge(s.batch() == 1 ? s : s.batch_item(0), layout,
                                 options.config.merge));
    }
    for (std::size_t gap = 1; gap < states.size(); ++gap) {
      double total = 0.0;
      for (std::size_t t = 0; t + gap < states.size(); ++t) {
        total += plan_overlap(fresh[t], fresh[t + gap]);
      }
      report.metrics.overlap_by_gap[gap] = total / static_cast<double>(states.size() - gap);
    }
  }

  // Phase timings on step 0, first batch item.
  MergePlan timed_plan;
  std::vector<DestinationSet> timed_dest(layout.regions);
  report.timings["select"] = time_repeated(
      [&] {
        for (std::size_t r = 0; r < layout.regions; ++r) {
          timed_dest[r] = greedy_select(cosine_similarity(parts[r]), layout.d_loc[r]);
        }
      },
      options.reps, options.warmup);
  TokenMatrix merged;
  report.timings["merge"] = time_repeated(
      [&] {
        timed_plan.assign(layout.regions, MergeWeights{});
        for (std::size_t r = 0; r < layout.regions; ++r) {
          timed_plan[r] = attention_merge_weights(parts[r], timed_dest[r], options.config.merge);
        }
        merged = merge_regions(item0, layout, timed_plan);
      },
      options.reps, options.warmup);
  report.timings["unmerge"] = time_repeated(
      [&] { (void)unmerge_regions(merged, layout, timed_plan, options.config); },
      options.reps, options.warmup);
  report.timings["total"] = time_repeated(
      [&] { (void)stepwise_pipeline(states, layout, options.config, schedule, core, reuse_options); },
      options.reps, options.warmup);

  report.cost = cost_report(CostParams{n, first.cols(), static_cast<double>(kept) / n,
                                       options.regions});
  return report;
}

}  // namespace toma
