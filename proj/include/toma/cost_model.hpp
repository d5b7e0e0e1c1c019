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

// Multiplication counts for one self-attention block with and without token
// merging (N tokens, width d, keep ratio r = D / N, k local regions):
//
//   base       4 d^2 N + 2 d N^2
//   attention  4 d^2 D + 2 d D^2
//   selection  N^2 d
//   proj, merge, unmerge   N D d each
//
// When D = rN is integral every count is computed in exact 64-bit integer
// arithmetic.

#ifndef TOMA_COST_MODEL_HPP_
#define TOMA_COST_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace toma {

struct CostParams {
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  double r = 1.0;
  std::uint64_t tiles = 1;

  void validate() const;
};

// Exact integer counts, present when D = rN is integral.
struct ExactCounts {
  std::uint64_t c_base = 0;
  std::uint64_t c_attn = 0;
  std::uint64_t c_sub = 0;
  std::uint64_t c_proj = 0;  // also c_merge and c_unmerge
  std::uint64_t c_lin = 0;
  std::uint64_t c_total = 0;
};

struct FlopReport {
  CostParams params;
  double kept_tokens = 0.0;  // D = rN
  bool exact = false;        // counts are exact integers
  std::optional<ExactCounts> exact_counts;

  double c_base = 0.0;
  double c_attn = 0.0;
  double c_sub = 0.0;
  double c_proj = 0.0;
  double c_merge = 0.0;
  double c_unmerge = 0.0;
  double c_lin = 0.0;
  double c_total = 0.0;

  double speedup_ideal = 0.0;
  double speedup_practical = 0.0;
  double analytic_bound = 0.0;     // 2 / (2 r^2 + 1)
  double large_n_estimate = 0.0;   // (2 + 4d/N) / (2 r^2 + 1 + 3 r)

  // Per-term costs with k regions: each region of N/k tokens and D/k
  // destinations, summed over regions.
  double c_sub_tiled = 0.0;
  double c_proj_tiled = 0.0;
  double c_merge_tiled = 0.0;
  double c_unmerge_tiled = 0.0;
  double c_total_tiled = 0.0;
  double speedup_practical_tiled = 0.0;
  double weight_ratio_derived = 1.0;  // c_proj_tiled / c_proj = 1/k
  double weight_ratio_claimed = 1.0;  // 1/k^2
  std::string notes;
};

FlopReport cost_report(const CostParams& params);

struct SpeedupLimitRow {
  std::uint64_t n = 0;
  double practical = 0.0;
  double estimate = 0.0;
  double gap = 0.0;  // |practical - estimate|
};

// Practical speedup against its large-N estimate along an ascending N grid.
std::vector<SpeedupLimitRow> speedup_limit_check(std::uint64_t d, double r,
                                                 const std::vector<std::uint64_t>& n_grid);

}  // namespace toma

#endif  // TOMA_COST_MODEL_HPP_
