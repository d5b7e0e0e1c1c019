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

#include "toma/merge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "toma/errors.hpp"
#include "toma/parallel.hpp"

namespace toma {
namespace {

void check_destinations(const DestinationSet& dest, std::size_t n) {
  if (dest.empty()) throw InvalidArgument("empty destination set");
  for (std::size_t j : dest.indices) {
    if (j >= n) throw InvalidArgument("destination index out of range");
  }
}

// Column softmax and its row normalization, both from the log domain:
//   log A[k][i] = l[k][i] - lse_k' l[k'][i]
//   Ã[k][i]    = exp(log A[k][i] - lse_i' log A[k][i'])
// so Ã stays well defined even when a whole row of A underflows in float.
void attention_from_logits(const std::vector<double>& logits, std::size_t rows,
                           std::size_t cols, Matrix& a_raw, Matrix& a_tilde) {
  std::vector<double> log_a(logits.size());
  parallel_for(cols, [&](std::size_t i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rows; ++k) peak = std::max(peak, logits[k * cols + i]);
    double total = 0.0;
    for (std::size_t k = 0; k < rows; ++k) total += std::exp(logits[k * cols + i] - peak);
    const double lse = peak + std::log(total);
    for (std::size_t k = 0; k < rows; ++k) log_a[k * cols + i] = logits[k * cols + i] - lse;
  });
  a_raw = Matrix(rows, cols);
  a_tilde = Matrix(rows, cols);
  parallel_for(rows, [&](std::size_t k) {
    const double* row = log_a.data() + k * cols;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cols; ++i) peak = std::max(peak, row[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < cols; ++i) total += std::exp(row[i] - peak);
    const double lse = peak + std::log(total);
    for (std::size_t i = 0; i < cols; ++i) {
      a_raw(k, i) = static_cast<float>(std::exp(row[i]));
      a_tilde(k, i) = static_cast<float>(std::exp(row[i] - lse));
    }
  });
}

}  // namespace

MergeWeights attention_merge_weights(const TokenMatrix& x, const Matrix& queries,
                                     const DestinationSet& dest,
                                     const MergeOptions& options) {
  if (x.batch() != 1) throw InvalidArgument("merge expects an unbatched matrix");
  check_destinations(dest, x.rows());
  if (!(options.tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (queries.rows() != dest.size() || queries.cols() != x.cols()) {
    throw InvalidArgument("destination queries do not match the destination set");
  }

  const TokenMatrix keys = options.cosine_logits ? l2_normalize_rows(x) : x;
  const Matrix q = options.cosine_logits ? l2_normalize_rows(queries) : queries;
  const double denom = options.scale_by_sqrt_d
                           ? options.tau * std::sqrt(static_cast<double>(x.cols()))
                           : options.tau;

  // Column softmax of Q K^T / denom. The value operand of the attention
  // form would be the identity, so the probabilities are the result.
  const Matrix dots = matmul_transposed(q, keys);
  std::vector<double> logits(dots.size());
  for (std::size_t e = 0; e < logits.size(); ++e) logits[e] = dots.data()[e] / denom;

  MergeWeights w;
  attention_from_logits(logits, dots.rows(), dots.cols(), w.a_raw, w.a_tilde);
  w.dest = dest;
  w.tau = options.tau;
  return w;
}

MergeWeights attention_merge_weights(const TokenMatrix& x, const DestinationSet& dest,
                                     const MergeOptions& options) {
  if (x.batch() != 1) throw InvalidArgument("merge expects an unbatched matrix");
  check_destinations(dest, x.rows());
  return attention_merge_weights(x, gather_rows(x, dest.indices), dest, options);
}

HardAssignment nearest_destination_assignment(const SimilarityMatrix& s,
                                              const DestinationSet& dest) {
  check_destinations(dest, s.size());
  const std::size_t n = s.size();
  HardAssignment out;
  out.group_of.assign(n, 0);
  out.weights.assign(n, 1.0f);
  out.slots = dest.size();

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < dest.size(); ++k) {
      if (s(i, dest.indices[k]) > s(i, dest.indices[best])) best = k;
    }
    out.group_of[i] = best;
  }
  for (std::size_t k = 0; k < dest.size(); ++k) out.group_of[dest.indices[k]] = k;
  return out;
}

Matrix assignment_matrix(const HardAssignment& assignment) {
  const std::size_t n = assignment.group_of.size();
  if (assignment.weights.size() != n) {
    throw InvalidArgument("assignment weights length does not match group_of");
  }
  std::vector<double> z(assignment.slots, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment.group_of[i] >= assignment.slots) {
      throw InvalidArgument("assignment slot out of range");
    }
    if (assignment.weights[i] < 0.0f) throw InvalidArgument("negative merge weight");
    z[assignment.group_of[i]] += assignment.weights[i];
  }
  for (std::size_t k = 0; k < assignment.slots; ++k) {
    if (!(z[k] > 0.0)) {
      throw InvalidArgument("group " + std::to_string(k) + " has no weight");
    }
  }
  Matrix w(assignment.slots, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = assignment.group_of[i];
    w(k, i) = static_cast<float>(static_cast<double>(assignment.weights[i]) / z[k]);
  }
  return w;
}

MergeWeights hard_merge_weights(const SimilarityMatrix& s, const DestinationSet& dest) {
  const HardAssignment assignment = nearest_destination_assignment(s, dest);
  MergeWeights w;
  w.a_raw = Matrix(dest.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) w.a_raw(assignment.group_of[i], i) = 1.0f;
  w.a_tilde = assignment_matrix(assignment);
  w.dest = dest;
  return w;
}

TokenMatrix apply_merge(const MergeWeights& w, const TokenMatrix& x) {
  if (x.batch() != 1) throw InvalidArgument("merge expects an unbatched matrix");
  if (w.a_tilde.cols() != x.rows()) {
    throw InvalidArgument("merge weights cover " + std::to_string(w.a_tilde.cols()) +
                          " tokens, input has " + std::to_string(x.rows()));
  }
  return matmul(w.a_tilde, x);
}

}  // namespace toma
