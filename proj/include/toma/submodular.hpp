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

// Facility-location destination selection.
//
//   f(D) = sum_i max_{j in D} S_ij
//
// The greedy maximizer keeps a cache m_j = max_{k in D} S_jk so that the gain
// of a candidate v is sum_j max(0, S_vj - m_j), one pass over a row of S.
// The first pick maximizes the plain row sum; selected tokens are masked
// (never re-picked) while S itself stays untouched. Ties go to the lowest
// index everywhere.

#ifndef TOMA_SUBMODULAR_HPP_
#define TOMA_SUBMODULAR_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "toma/tensor.hpp"

namespace toma {

// Selected destination token indices, in selection order.
struct DestinationSet {
  std::vector<std::size_t> indices;
  std::size_t budget = 0;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  friend bool operator==(const DestinationSet&, const DestinationSet&) = default;
};

// Cached best-similarity vector of the greedy loop.
struct GreedyState {
  std::vector<double> best;    // m_j
  std::vector<bool> selected;  // mask
  std::size_t count = 0;

  static GreedyState empty(std::size_t n);
};

// Adds v to the state: m <- S_v for the first element, max(m, S_v) after.
void add_to_state(const SimilarityMatrix& s, GreedyState& state, std::size_t v);

// Throws InvalidArgument("empty destination set") on an empty set.
double facility_location_value(const SimilarityMatrix& s, const DestinationSet& d);
double facility_location_value(const SimilarityMatrix& s,
                               std::span<const std::size_t> indices);

// Cached gain of v. With an empty state this is the row sum of S_v (the
// first-pick score).
double marginal_gain(const SimilarityMatrix& s, const GreedyState& state,
                     std::size_t v);

// Per-iteration hook: step (0-based), state before the pick, the gain of
// every candidate (-inf for masked ones) and the chosen index.
using GreedyObserver = std::function<void(std::size_t step, const GreedyState& state,
                                          std::span<const double> gains,
                                          std::size_t pick)>;

// Requires 1 <= budget <= N.
DestinationSet greedy_select(const SimilarityMatrix& s, std::size_t budget,
                             const GreedyObserver& observer = {});

// Exact maximizer by subset enumeration, lexicographically first among ties.
// Guarded to N <= 20 and C(N, budget) <= 2e6.
DestinationSet brute_force_select(const SimilarityMatrix& s, std::size_t budget);

}  // namespace toma

#endif  // TOMA_SUBMODULAR_HPP_
