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

#ifndef TOMA_UNMERGE_HPP_
#define TOMA_UNMERGE_HPP_

#include <vector>

#include "toma/merge.hpp"
#include "toma/tensor.hpp"

namespace toma {

enum class UnmergeMode { kTranspose, kPinv };

// How far the rows of a_tilde are from orthonormal: gram = A A^T = I + eps.
struct OrthoDiagnostics {
  Matrix gram;
  double eps_fro = 0.0;
  double eps_max = 0.0;
  std::vector<double> row_norms;
};

// a_tilde^T * x_prime (N x d).
TokenMatrix unmerge_transpose(const MergeWeights& w, const TokenMatrix& x_prime);

// a_tilde^T (a_tilde a_tilde^T + lambda I)^{-1} x_prime through a Cholesky
// solve of the D x D Gram system. lambda starts at `ridge` and escalates by
// {0, 1e-8, 1e-6, 1e-4} * trace(G)/D until the factorization is healthy;
// NumericalError("rank-deficient merge weights") if none is.
TokenMatrix unmerge_pinv(const MergeWeights& w, const TokenMatrix& x_prime,
                         double ridge = 0.0);

// The explicit N x D operator used by unmerge_pinv.
Matrix pseudo_inverse(const Matrix& a_tilde, double ridge = 0.0);

TokenMatrix unmerge(const MergeWeights& w, const TokenMatrix& x_prime,
                    UnmergeMode mode, double ridge = 0.0);

OrthoDiagnostics ortho_diagnostics(const MergeWeights& w);
OrthoDiagnostics ortho_diagnostics(const Matrix& a_tilde);

}  // namespace toma

#endif  // TOMA_UNMERGE_HPP_
