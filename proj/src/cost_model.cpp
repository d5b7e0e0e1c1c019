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

#include "toma/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "toma/errors.hpp"

namespace toma {
namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

constexpr u128 kU64Max = static_cast<u128>(~u64{0});

u64 checked(u128 v) {
  if (v > kU64Max) throw InvalidArgument("flop count overflows 64 bits");
  return static_cast<u64>(v);
}

}  // namespace

void CostParams::validate() const {
  if (n < 1 || d < 1 || tiles < 1) throw InvalidArgument("n, d and tiles must be >= 1");
  if (!(r > 0.0 && r <= 1.0)) throw InvalidArgument("ratio must lie in (0, 1]");
  if (r * static_cast<double>(n) < 1.0) {
    throw InvalidArgument("ratio keeps fewer than one token (r * n < 1)");
  }
}

FlopReport cost_report(const CostParams& p) {
  p.validate();
  FlopReport out;
  out.params = p;

  const double n = static_cast<double>(p.n);
  const double d = static_cast<double>(p.d);
  const double kept = p.r * n;
  const double kept_rounded = std::round(kept);
  out.exact = std::abs(kept - kept_rounded) <= 1e-9 * std::max(1.0, kept);
  out.kept_tokens = out.exact ? kept_rounded : kept;

  if (out.exact) {
    const u128 N = p.n;
    const u128 dd = p.d;
    const u128 D = static_cast<u64>(kept_rounded);
    const u128 base = 4 * dd * dd * N + 2 * dd * N * N;
    const u128 attn = 4 * dd * dd * D + 2 * dd * D * D;
    const u128 sub = N * N * dd;
    const u128 proj = N * D * dd;
    ExactCounts e;
    e.c_base = checked(base);
    e.c_attn = checked(attn);
    e.c_sub = checked(sub);
    e.c_proj = checked(proj);
    e.c_lin = checked(3 * proj);
    e.c_total = checked(attn + sub + 3 * proj);
    out.exact_counts = e;
    out.c_base = static_cast<double>(e.c_base);
    out.c_attn = static_cast<double>(e.c_attn);
    out.c_sub = static_cast<double>(e.c_sub);
    out.c_proj = static_cast<double>(e.c_proj);
  } else {
    out.c_base = 4 * d * d * n + 2 * d * n * n;
    out.c_attn = 4 * d * d * kept + 2 * d * kept * kept;
    out.c_sub = n * n * d;
    out.c_proj = n * kept * d;
  }
  out.c_merge = out.c_proj;
  out.c_unmerge = out.c_proj;
  out.c_lin = out.c_proj + out.c_merge + out.c_unmerge;
  out.c_total = out.c_attn + out.c_sub + out.c_lin;

  out.speedup_ideal = out.c_base / out.c_attn;
  out.speedup_practical = out.c_base / out.c_total;
  out.analytic_bound = 2.0 / (2.0 * p.r * p.r + 1.0);
  out.large_n_estimate = (2.0 + 4.0 * d / n) / (2.0 * p.r * p.r + 1.0 + 3.0 * p.r);

  // k regions of N/k tokens with D/k destinations each:
  //   selection  k (N/k)^2 d     = N^2 d / k
  //   proj etc.  k (N/k)(D/k) d  = N D d / k
  const double k = static_cast<double>(p.tiles);
  out.c_sub_tiled = out.c_sub / k;
  out.c_proj_tiled = out.c_proj / k;
  out.c_merge_tiled = out.c_merge / k;
  out.c_unmerge_tiled = out.c_unmerge / k;
  out.c_total_tiled = out.c_attn + out.c_sub_tiled + out.c_proj_tiled + out.c_merge_tiled +
                      out.c_unmerge_tiled;
  out.speedup_practical_tiled = out.c_base / out.c_total_tiled;
  out.weight_ratio_derived = 1.0 / k;
  out.weight_ratio_claimed = 1.0 / (k * k);
  out.notes =
      "Per-term tiling gives 1/k for selection and 1/k (not 1/k^2) for the weight "
      "projection, merge and unmerge; weight_ratio_claimed records the 1/k^2 figure "
      "for comparison only. Counts are scalar multiplications; multiply by 2 for "
      "multiply-add FLOPs.";
  return out;
}

std::vector<SpeedupLimitRow> speedup_limit_check(std::uint64_t d, double r,
                                                 const std::vector<std::uint64_t>& n_grid) {
  std::vector<SpeedupLimitRow> rows;
  std::uint64_t previous = 0;
  for (std::uint64_t n : n_grid) {
    if (n < previous) throw InvalidArgument("n_grid must be ascending");
    if (n < d) throw InvalidArgument("n_grid entries must be >= d");
    previous = n;
    const FlopReport report = cost_report(CostParams{n, d, r, 1});
    SpeedupLimitRow row;
    row.n = n;
    row.practical = report.speedup_practical;
    row.estimate = report.large_n_estimate;
    row.gap = std::abs(row.practical - row.estimate);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace toma
