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

#ifndef TOMA_BENCH_HPP_
#define TOMA_BENCH_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace toma {

// Median and quartiles (linear interpolation) of wall-clock samples.
struct TimingStats {
  double median_us = 0.0;
  double q1_us = 0.0;
  double q3_us = 0.0;
  double iqr_us = 0.0;
  std::size_t samples = 0;
};

TimingStats summarize_timings(std::vector<double> samples_us);

// Runs fn `warmup` times untimed, then `reps` timed runs on the steady clock.
TimingStats time_repeated(const std::function<void()>& fn, std::size_t reps,
                          std::size_t warmup);

struct BenchRow {
  double ratio = 0.0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t destinations = 0;
  TimingStats merge;    // apply_merge
  TimingStats unmerge;  // unmerge_transpose
};

struct BenchOptions {
  std::size_t n = 1024;
  std::size_t d = 64;
  std::vector<double> ratios{0.25, 0.5, 0.75};
  std::size_t reps = 1000;
  std::size_t warmup = 50;
  std::uint64_t seed = 0;
};

// Times the merge and transpose-unmerge products in isolation for each
// ratio. Inputs are Gaussian tokens with evenly strided destinations and
// attention weights at the default temperature.
std::vector<BenchRow> bench_merge_unmerge(const BenchOptions& options);

}  // namespace toma

#endif  // TOMA_BENCH_HPP_
