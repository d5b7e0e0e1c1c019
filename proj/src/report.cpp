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

#include "toma/report.hpp"

#include <sstream>

namespace toma {
namespace {

using nlohmann::json;


const char* unmerge_name(UnmergeMode mode) {
  return mode == UnmergeMode::kPinv ? "pinv" : "transpose";
}

}  // namespace

json to_json(const FlopReport& r, bool with_adds) {
  const bool exact = r.exact_counts.has_value();
  json counts;
  if (exact) {
    // Exact counts are emitted as JSON integers.
    const ExactCounts& e = *r.exact_counts;
    counts = {{"c_base", e.c_base},  {"c_attn", e.c_attn},    {"c_sub", e.c_sub},
              {"c_proj", e.c_proj},  {"c_merge", e.c_proj},   {"c_unmerge", e.c_proj},
              {"c_lin", e.c_lin},    {"c_total", e.c_total}};
  } else {
    counts = {{"c_base", r.c_base},   {"c_attn", r.c_attn},   {"c_sub", r.c_sub},
              {"c_proj", r.c_proj},   {"c_merge", r.c_merge}, {"c_unmerge", r.c_unmerge},
              {"c_lin", r.c_lin},     {"c_total", r.c_total}};
  }
  json out = {
      {"unit", "multiplications"},
      {"params", {{"n", r.params.n}, {"d", r.params.d}, {"r", r.params.r},
                  {"tiles", r.params.tiles}}},
      {"kept_tokens", r.kept_tokens},
      {"exact_integers", exact},
      {"counts", counts},
      {"speedup_ideal", r.speedup_ideal},
      {"speedup_practical", r.speedup_practical},
      {"analytic_bound", r.analytic_bound},
      {"large_n_estimate", r.large_n_estimate},
      {"tiled",
       {{"c_sub", r.c_sub_tiled},
        {"c_proj", r.c_proj_tiled},
        {"c_merge", r.c_merge_tiled},
        {"c_unmerge", r.c_unmerge_tiled},
        {"c_total", r.c_total_tiled},
        {"speedup_practical", r.speedup_practical_tiled},
        {"weight_ratio_derived", r.weight_ratio_derived},
        {"weight_ratio_claimed", r.weight_ratio_claimed}}},
      {"notes", r.notes},
  };
  if (with_adds) {
    json flops;
    // Doubling an exact count can only overflow far past any sane shape.
    for (const auto& [key, value] : counts.items()) {
      if (value.is_number_unsigned()) {
        flops[key] = 2 * value.get<std::uint64_t>();
      } else {
        flops[key] = 2.0 * value.get<double>();
      }
    }
    out["flops_with_adds"] = flops;
  }
  return out;
}

json to_json(const TimingStats& s) {
  return {{"median_us", s.median_us}, {"q1_us", s.q1_us}, {"q3_us", s.q3_us},
          {"iqr_us", s.iqr_us},       {"samples", s.samples}};
}

json to_json(const ReuseLog& log) {
  json entries = json::array();
  for (const auto& e : log.entries) {
    entries.push_back({{"step", e.step},
                       {"cache_key", e.cache_key},
                       {"recomputed_destinations", e.recomputed_destinations},
                       {"recomputed_weights", e.recomputed_weights},
                       {"destinations", e.destinations}});
  }
  return entries;
}

json to_json(const RunReport& r) {
  const RunOptions& o = r.options;
  json metrics = {
      {"facility_location", r.metrics.facility_location},
      {"facility_location_per_token", r.metrics.facility_location_per_token},
      {"eps_fro", r.metrics.eps_fro},
      {"eps_fro_max", r.metrics.eps_fro_max},
      {"roundtrip_rel_mse", r.metrics.roundtrip_rel_mse},
  };
  if (r.metrics.roundtrip_rel_mse_transpose && r.metrics.roundtrip_rel_mse_pinv) {
    metrics["unmerge_comparison"] = {
        {"transpose_rel_mse", *r.metrics.roundtrip_rel_mse_transpose},
        {"pinv_rel_mse", *r.metrics.roundtrip_rel_mse_pinv},
        {"difference", *r.metrics.roundtrip_rel_mse_pinv - *r.metrics.roundtrip_rel_mse_transpose},
    };
  }
  json overlap = json::array();
  for (const auto& [gap, value] : r.metrics.overlap_by_gap) {
    overlap.push_back({{"gap", gap}, {"mean_overlap", value}});
  }
  metrics["overlap_by_gap"] = overlap;

  json timings = json::object();
  for (const auto& [name, stats] : r.timings) timings[name] = to_json(stats);

  return {
      {"schema_version", r.schema_version},
      {"config",
       {{"tau", o.config.merge.tau},
        {"scale_by_sqrt_d", o.config.merge.scale_by_sqrt_d},
        {"cosine_logits", o.config.merge.cosine_logits},
        {"ratio", o.ratio},
        {"layout", to_string(o.layout)},
        {"regions", o.regions},
        {"dest_every", o.dest_every},
        {"weights_every", o.weights_every},
        {"freeze_destinations", o.freeze_destinations},
        {"unmerge", unmerge_name(o.config.unmerge)},
        {"ridge", o.config.ridge},
        {"core", o.core},
        {"deterministic", o.deterministic},
        {"reps", o.reps},
        {"seed", o.seed}}},
      {"shape",
       {{"steps", r.steps}, {"batch", r.batch}, {"n", r.n}, {"d", r.d},
        {"destinations", r.destinations}}},
      {"metrics", metrics},
      {"timings", timings},
      {"cost_model", to_json(r.cost)},
      {"reuse_log", to_json(r.reuse_log)},
  };
}

json to_json(const std::vector<BenchRow>& rows, const BenchOptions& options) {
  json table = json::array();
  for (const auto& row : rows) {
    table.push_back({{"ratio", row.ratio},
                     {"n", row.n},
                     {"d", row.d},
                     {"destinations", row.destinations},
                     {"merge", to_json(row.merge)},
                     {"unmerge", to_json(row.unmerge)}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"config",
           {{"n", options.n},
            {"dim", options.d},
            {"ratios", options.ratios},
            {"reps", options.reps},
            {"warmup", options.warmup},
            {"seed", options.seed},
            {"clock", "steady_clock"}}},
          {"timings", table}};
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "ratio,n,d,destinations,merge_median_us,merge_iqr_us,unmerge_median_us,"
         "unmerge_iqr_us,samples\n";
  for (const auto& row : rows) {
    out << row.ratio << ',' << row.n << ',' << row.d << ',' << row.destinations << ','
        << row.merge.median_us << ',' << row.merge.iqr_us << ',' << row.unmerge.median_us
        << ',' << row.unmerge.iqr_us << ',' << row.merge.samples << '\n';
  }
  return out.str();
}

}  // namespace toma
