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

// End-to-end runs over a sequence of token files and their JSON reports.
// The report layout is documented in docs/report_schema.md.

#ifndef TOMA_REPORT_HPP_
#define TOMA_REPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toma/bench.hpp"
#include "toma/cost_model.hpp"
#include "toma/locality.hpp"
#include "toma/reuse.hpp"

namespace toma {

inline constexpr int kReportSchemaVersion = 1;

struct RunOptions {
  double ratio = 0.5;
  MergeConfig config;
  LayoutKind layout = LayoutKind::kGlobal;
  std::size_t regions = 1;
  std::size_t dest_every = 1;
  std::size_t weights_every = 1;
  bool freeze_destinations = false;
  bool compare_unmerge = false;
  bool deterministic = false;
  std::string core = "identity";
  std::size_t reps = 3;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
};

struct RunMetrics {
  double facility_location = 0.0;            // step 0, summed over regions
  double facility_location_per_token = 0.0;  // the same divided by N
  double eps_fro = 0.0;                      // step 0, mean over regions
  double eps_fro_max = 0.0;                  // step 0, worst region
  double roundtrip_rel_mse = 0.0;            // mean over steps of |y - x|^2 / |x|^2
  std::optional<double> roundtrip_rel_mse_transpose;
  std::optional<double> roundtrip_rel_mse_pinv;
  // gap -> mean pooled overlap between fresh selections `gap` steps apart.
  std::map<std::size_t, double> overlap_by_gap;
};

struct RunReport {
  int schema_version = kReportSchemaVersion;
  RunOptions options;
  std::size_t steps = 0;
  std::size_t batch = 1;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t destinations = 0;
  RunMetrics metrics;
  std::map<std::string, TimingStats> timings;  // select, merge, unmerge, total
  FlopReport cost;
  ReuseLog reuse_log;
};

// Runs the stepwise pipeline on `states` (one matrix per step) with the
// identity core and collects metrics, timings and the cost model.
RunReport execute_run(const std::vector<TokenMatrix>& states, const RunOptions& options);

nlohmann::json to_json(const FlopReport& report, bool with_adds = false);
nlohmann::json to_json(const TimingStats& stats);
nlohmann::json to_json(const ReuseLog& log);
nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const std::vector<BenchRow>& rows, const BenchOptions& options);

// CSV flattening of a timing table: one line per ratio.
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace toma

#endif  // TOMA_REPORT_HPP_
