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

// Token merging as a linear projection X_merged = W X with a non-negative,
// row-stochastic D x N matrix W. Soft weights come from a column softmax of
// destination/source logits (each source token splits exactly 100% of its
// mass across destinations), then each row is renormalized. Hard weights are
// the one-hot nearest-destination grouping with uniform averaging.

#ifndef TOMA_MERGE_HPP_
#define TOMA_MERGE_HPP_

#include <cstddef>
#include <vector>

#include "toma/submodular.hpp"
#include "toma/tensor.hpp"

namespace toma {

inline constexpr double kDefaultTau = 0.1;

struct MergeOptions {
  double tau = kDefaultTau;
  bool scale_by_sqrt_d = true;
  // Cosine logits (L2-normalized embeddings); false uses raw dot products.
  bool cosine_logits = true;
};

struct MergeWeights {
  Matrix a_raw;    // D x N, columns sum to 1
  Matrix a_tilde;  // D x N, rows sum to 1
  DestinationSet dest;
  double tau = 0.0;

  std::size_t destinations() const { return a_tilde.rows(); }
  std::size_t sources() const { return a_tilde.cols(); }
};

// Source token i belongs to slot group_of[i] with weight weights[i].
struct HardAssignment {
  std::vector<std::size_t> group_of;
  std::vector<float> weights;  // alpha; all ones for uniform averaging
  std::size_t slots = 0;
};

// Queries are the destination rows of x.
MergeWeights attention_merge_weights(const TokenMatrix& x, const DestinationSet& dest,
                                     const MergeOptions& options = {});

// Queries supplied explicitly (e.g. destination embeddings frozen at an
// earlier step). queries.rows() must equal dest.size().
MergeWeights attention_merge_weights(const TokenMatrix& x, const Matrix& queries,
                                     const DestinationSet& dest,
                                     const MergeOptions& options = {});

// Every source joins its most similar destination (lowest slot on ties);
// destination tokens always own their own slot.
HardAssignment nearest_destination_assignment(const SimilarityMatrix& s,
                                              const DestinationSet& dest);

// W with W(k, i) = alpha_i / Z_k for i in group k. Throws if a group is
// empty or has zero total weight.
Matrix assignment_matrix(const HardAssignment& assignment);

// One-hot (ToMeSD-style) weights: a_raw holds one-hot columns, a_tilde the
// uniform group averages.
MergeWeights hard_merge_weights(const SimilarityMatrix& s, const DestinationSet& dest);

// a_tilde * x, a D x d matrix.
TokenMatrix apply_merge(const MergeWeights& w, const TokenMatrix& x);

}  // namespace toma

#endif  // TOMA_MERGE_HPP_
