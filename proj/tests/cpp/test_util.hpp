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


// Shared helpers for the C++ tests: random inputs and naive reference
// computations written independently of the library code paths.

#ifndef TOMA_TESTS_TEST_UTIL_HPP_
#define TOMA_TESTS_TEST_UTIL_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "toma/tensor.hpp"

namespace toma::testing {

using Dense = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline TokenMatrix gaussian_tokens(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TokenMatrix x(n, d);
  for (float& v : x.data()) v = static_cast<float>(normal(rng));
  return x;
}

// Entries in [0, 1): every pairwise cosine is non-negative.
inline TokenMatrix positive_tokens(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  TokenMatrix x(n, d);
  for (float& v : x.data()) v = static_cast<float>(uni(rng));
  return x;
}

// Near-orthogonal tokens: a scaled basis vector plus small noise (needs d >= n).
inline TokenMatrix separated_tokens(std::size_t n, std::size_t d, std::mt19937_64& rng,
                                    double noise = 0.05) {
  std::normal_distribution<double> normal(0.0, noise);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  TokenMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scale(rng);
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = static_cast<float>(s * ((i % d == j) ? 1.0 : 0.0) + normal(rng));
    }
  }
  return x;
}

inline Dense to_dense(const Matrix& m) {
  Dense out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline Matrix from_dense(const Dense& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = static_cast<float>(m(i, j));
  return out;
}

inline Dense naive_cosine(const TokenMatrix& x) {
  const std::size_t n = x.rows();
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) norms[i] += double(x(i, k)) * x(i, k);
    norms[i] = std::sqrt(norms[i]);
  }
  Dense s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) dot += double(x(i, k)) * x(j, k);
      s(i, j) = (norms[i] < 1e-12 || norms[j] < 1e-12) ? 0.0 : dot / (norms[i] * norms[j]);
    }
  }
  return s;
}

inline double naive_fl(const SimilarityMatrix& s, const std::vector<std::size_t>& set) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double best = -1e300;
    for (std::size_t j : set) best = std::max(best, double(s(i, j)));
    total += best;
  }
  return total;
}

// SVD-based Moore-Penrose inverse.
inline Dense svd_pinv(const Dense& a) {
  Eigen::JacobiSVD<Dense> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-12 * std::max<double>(a.rows(), a.cols()) * sv(0);
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline double relative_error(const Matrix& y, const Matrix& x) {
  return frobenius_distance(y, x) / frobenius_norm(x);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a.data()[i]) - b.data()[i]));
  return m;
}

// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto p, auto q) { return v[p] < v[q]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * double(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return (saa == 0 || sbb == 0) ? 0.0 : sab / std::sqrt(saa * sbb);
}

}  // namespace toma::testing

#endif  // TOMA_TESTS_TEST_UTIL_HPP_
