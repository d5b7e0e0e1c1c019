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

#include "toma/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "toma/errors.hpp"
#include "toma/merge.hpp"
#include "toma/unmerge.hpp"

namespace toma {
namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Keeps the optimizer from discarding benchmark results.
volatile float g_sink = 0.0f;

}  // namespace

TimingStats summarize_timings(std::vector<double> samples_us) {
  if (samples_us.empty()) throw InvalidArgument("no timing samples");
  std::sort(samples_us.begin(), samples_us.end());
  TimingStats s;
  s.samples = samples_us.size();
  s.median_us = quantile(samples_us, 0.5);
  s.q1_us = quantile(samples_us, 0.25);
  s.q3_us = quantile(samples_us, 0.75);
  s.iqr_us = s.q3_us - s.q1_us;
  return s;
}

TimingStats time_repeated(const std::function<void()>& fn, std::size_t reps,
                          std::size_t warmup) {
  if (reps == 0) throw InvalidArgument("reps must be >= 1");
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
  }
  return summarize_timings(std::move(samples));
}

std::vector<BenchRow> bench_merge_unmerge(const BenchOptions& options) {
  if (options.n < 1 || options.d < 1) throw InvalidArgument("n and dim must be >= 1");
  if (options.ratios.empty()) throw InvalidArgument("at least one ratio is required");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TokenMatrix x(options.n, options.d);
  for (float& v : x.data()) v = static_cast<float>(normal(rng));

  std::vector<BenchRow> rows;
  for (double ratio : options.ratios) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("ratios must lie in (0, 1]");
    const auto kept = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(options.n)));
    if (kept < 1) throw InvalidArgument("ratio keeps no tokens");

    DestinationSet dest;
    dest.budget = kept;
    for (std::size_t k = 0; k < kept; ++k) dest.indices.push_back(k * options.n / kept);
    const MergeWeights w = attention_merge_weights(x, dest);
    const TokenMatrix merged = apply_merge(w, x);

    BenchRow row;
    row.ratio = ratio;
    row.n = options.n;
    row.d = options.d;
    row.destinations = kept;
    row.merge = time_repeated([&] { g_sink = apply_merge(w, x)(0, 0); }, options.reps,
                              options.warmup);
    row.unmerge = time_repeated([&] { g_sink = unmerge_transpose(w, merged)(0, 0); },
                                options.reps, options.warmup);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace toma
