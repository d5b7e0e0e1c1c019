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

#include "toma/submodular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "toma/errors.hpp"
#include "toma/parallel.hpp"

namespace toma {
namespace {

constexpr double kMasked = -std::numeric_limits<double>::infinity();

double row_sum(std::span<const float> row) {
  double acc = 0.0;
  for (float v : row) acc += v;
  return acc;
}

double cached_gain(std::span<const float> row, std::span<const double> best) {
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double diff = static_cast<double>(row[j]) - best[j];
    acc += diff > 0.0 ? diff : 0.0;
  }
  return acc;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return c;
}

}  // namespace

GreedyState GreedyState::empty(std::size_t n) {
  GreedyState state;
  state.best.assign(n, 0.0);
  state.selected.assign(n, false);
  return state;
}

void add_to_state(const SimilarityMatrix& s, GreedyState& state, std::size_t v) {
  if (v >= s.size()) throw InvalidArgument("token index out of range");
  if (state.selected[v]) throw InvalidArgument("token already selected");
  const auto row = s.row(v);
  for (std::size_t j = 0; j < row.size(); ++j) {
    state.best[j] = state.count == 0 ? row[j] : std::max<double>(state.best[j], row[j]);
  }
  state.selected[v] = true;
  ++state.count;
}

double facility_location_value(const SimilarityMatrix& s,
                               std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgument("empty destination set");
  for (std::size_t j : indices) {
    if (j >= s.size()) throw InvalidArgument("destination index out of range");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j : indices) best = std::max<double>(best, s(i, j));
    total += best;
  }
  return total;
}

double facility_location_value(const SimilarityMatrix& s, const DestinationSet& d) {
  return facility_location_value(s, d.indices);
}

double marginal_gain(const SimilarityMatrix& s, const GreedyState& state,
                     std::size_t v) {
  if (v >= s.size()) throw InvalidArgument("token index out of range");
  if (state.best.size() != s.size()) throw InvalidArgument("greedy state size mismatch");
  if (state.selected[v]) throw InvalidArgument("token already selected");
  if (state.count == 0) return row_sum(s.row(v));
  return cached_gain(s.row(v), state.best);
}

DestinationSet greedy_select(const SimilarityMatrix& s, std::size_t budget,
                             const GreedyObserver& observer) {
  const std::size_t n = s.size();
  if (budget < 1 || budget > n) {
    throw InvalidArgument("budget " + std::to_string(budget) +
                          " outside [1, " + std::to_string(n) + "]");
  }

  DestinationSet dest;
  dest.budget = budget;
  dest.indices.reserve(budget);
  GreedyState state = GreedyState::empty(n);
  std::vector<double> gains(n);

  for (std::size_t step = 0; step < budget; ++step) {
    parallel_for(n, [&](std::size_t i) {
      if (state.selected[i]) {
        gains[i] = kMasked;
      } else if (state.count == 0) {
        gains[i] = row_sum(s.row(i));
      } else {
        gains[i] = cached_gain(s.row(i), state.best);
      }
    });
    const std::size_t pick = argmax_lowest(gains);
    if (observer) observer(step, state, gains, pick);
    add_to_state(s, state, pick);
    dest.indices.push_back(pick);
  }
  return dest;
}

DestinationSet brute_force_select(const SimilarityMatrix& s, std::size_t budget) {
  const std::size_t n = s.size();
  if (budget < 1 || budget > n) {
    throw InvalidArgument("budget " + std::to_string(budget) +
                          " outside [1, " + std::to_string(n) + "]");
  }
  if (n > 20 || binomial(n, budget) > 2e6) {
    throw InvalidArgument("instance too large for oracle");
  }

  std::vector<std::size_t> combo(budget);
  std::iota(combo.begin(), combo.end(), 0);
  std::vector<std::size_t> best_combo = combo;
  double best_value = facility_location_value(s, combo);

  while (true) {
    // Advance to the next combination in lexicographic order.
    std::size_t pos = budget;
    while (pos > 0 && combo[pos - 1] == n - budget + pos - 1) --pos;
    if (pos == 0) break;
    ++combo[pos - 1];
    for (std::size_t k = pos; k < budget; ++k) combo[k] = combo[k - 1] + 1;

    const double value = facility_location_value(s, combo);
    if (value > best_value + 1e-9 * std::max(1.0, std::abs(best_value))) {
      best_value = value;
      best_combo = combo;
    }
  }
  return DestinationSet{best_combo, budget};
}

}  // namespace toma
