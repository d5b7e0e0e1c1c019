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

#include "toma/unmerge.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <array>
#include <cmath>
#include <string>

#include "toma/errors.hpp"

namespace toma {
namespace {

using MatrixXdRow = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatrixXdRow to_eigen(const Matrix& m) {
  MatrixXdRow out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  }
  return out;
}

Matrix from_eigen(const MatrixXdRow& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = static_cast<float>(m(i, j));
  }
  return out;
}

// Smallest eigenvalue of the factored SPD matrix by inverse iteration. The
// estimate approaches the true value from above.
double smallest_eigenvalue(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index d) {
  Eigen::VectorXd x(d);
  for (Eigen::Index k = 0; k < d; ++k) x(k) = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(k));
  x.normalize();
  double rho = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd y = llt.solve(x);
    const double next = y.norm();
    if (!(next > 0.0) || !std::isfinite(next)) return 0.0;
    x = y / next;
    if (it > 2 && std::abs(next - rho) <= 1e-6 * next) {
      rho = next;
      break;
    }
    rho = next;
  }
  return 1.0 / rho;
}

// Solves (A A^T + lambda I) Y = rhs. lambda starts at the caller's ridge and
// climbs the ladder; an escalated rung is only accepted when the added
// ridge stays small next to the Gram matrix's weakest direction, so exactly
// rank-deficient weights fail instead of being silently regularized.
MatrixXdRow solve_gram(const MatrixXdRow& a, const MatrixXdRow& rhs, double ridge) {
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be non-negative");
  const Eigen::Index d = a.rows();
  const Eigen::MatrixXd gram = a * a.transpose();
  const double scale = gram.trace() / static_cast<double>(d);
  if (!std::isfinite(scale) || !(scale > 0.0)) {
    throw NumericalError("rank-deficient merge weights");
  }

  constexpr std::array<double, 4> kLadder = {0.0, 1e-8, 1e-6, 1e-4};
  for (double step : kLadder) {
    const double lambda = ridge + step * scale;
    Eigen::MatrixXd g = gram;
    g.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) continue;
    const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
    if (!(min_pivot * min_pivot > 1e-12 * scale)) continue;
    if (step > 0.0 && !(smallest_eigenvalue(llt, d) > 10.0 * step * scale)) continue;
    return llt.solve(rhs);
  }
  throw NumericalError("rank-deficient merge weights");
}

void check_rows(const MergeWeights& w, const TokenMatrix& x_prime) {
  if (x_prime.batch() != 1) throw InvalidArgument("unmerge expects an unbatched matrix");
  if (x_prime.rows() != w.a_tilde.rows()) {
    throw InvalidArgument("unmerge input has " + std::to_string(x_prime.rows()) +
                          " rows, merge weights have " +
                          std::to_string(w.a_tilde.rows()) + " destinations");
  }
}

}  // namespace

TokenMatrix unmerge_transpose(const MergeWeights& w, const TokenMatrix& x_prime) {
  check_rows(w, x_prime);
  return transposed_matmul(w.a_tilde, x_prime);
}

TokenMatrix unmerge_pinv(const MergeWeights& w, const TokenMatrix& x_prime, double ridge) {
  check_rows(w, x_prime);
  const MatrixXdRow a = to_eigen(w.a_tilde);
  const MatrixXdRow y = solve_gram(a, to_eigen(x_prime), ridge);
  return from_eigen(a.transpose() * y);
}

Matrix pseudo_inverse(const Matrix& a_tilde, double ridge) {
  const MatrixXdRow a = to_eigen(a_tilde);
  const MatrixXdRow identity = MatrixXdRow::Identity(a.rows(), a.rows());
  return from_eigen(a.transpose() * solve_gram(a, identity, ridge));
}

TokenMatrix unmerge(const MergeWeights& w, const TokenMatrix& x_prime, UnmergeMode mode,
                    double ridge) {
  return mode == UnmergeMode::kPinv ? unmerge_pinv(w, x_prime, ridge)
                                    : unmerge_transpose(w, x_prime);
}

OrthoDiagnostics ortho_diagnostics(const Matrix& a_tilde) {
  const MatrixXdRow a = to_eigen(a_tilde);
  const MatrixXdRow gram = a * a.transpose();
  MatrixXdRow defect = gram;
  defect.diagonal().array() -= 1.0;

  OrthoDiagnostics out;
  out.gram = from_eigen(gram);
  out.eps_fro = defect.norm();
  out.eps_max = defect.size() == 0 ? 0.0 : defect.cwiseAbs().maxCoeff();
  out.row_norms.resize(a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) out.row_norms[k] = a.row(k).norm();
  return out;
}

OrthoDiagnostics ortho_diagnostics(const MergeWeights& w) {
  return ortho_diagnostics(w.a_tilde);
}

}  // namespace toma
