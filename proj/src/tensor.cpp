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

#include "toma/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "toma/errors.hpp"
#include "toma/parallel.hpp"

namespace toma {
namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

void softmax_inplace(std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& e : v) {
    e = std::exp(e - hi);
    total += e;
  }
  for (double& e : v) e /= total;
}

}  // namespace

TokenMatrix::TokenMatrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

TokenMatrix::TokenMatrix(std::size_t rows, std::size_t cols,
                         std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw InvalidArgument("token matrix data length " +
                          std::to_string(data_.size()) + " does not match " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

TokenMatrix TokenMatrix::batched(std::size_t batch, std::size_t rows,
                                 std::size_t cols, std::vector<float> data) {
  if (batch == 0) throw InvalidArgument("batch must be at least 1");
  if (data.size() != batch * rows * cols) {
    throw InvalidArgument("batched token data length does not match B*N*d");
  }
  TokenMatrix m;
  m.batch_ = batch;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

TokenMatrix TokenMatrix::identity(std::size_t n) {
  TokenMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

TokenMatrix TokenMatrix::stack(std::span<const TokenMatrix> items) {
  if (items.empty()) throw InvalidArgument("cannot stack zero matrices");
  const auto& first = items.front();
  std::vector<float> data;
  data.reserve(items.size() * first.rows() * first.cols());
  for (const auto& item : items) {
    if (item.batch() != 1 || item.rows() != first.rows() ||
        item.cols() != first.cols()) {
      throw InvalidArgument("stack requires equally shaped unbatched matrices");
    }
    data.insert(data.end(), item.data().begin(), item.data().end());
  }
  auto out = batched(items.size(), first.rows(), first.cols(), std::move(data));
  out.grid_ = first.grid_;
  return out;
}

void TokenMatrix::set_grid(std::optional<Grid> grid) {
  if (grid && grid->size() != rows_) {
    throw InvalidArgument("grid " + std::to_string(grid->height) + "x" +
                          std::to_string(grid->width) +
                          " does not cover " + std::to_string(rows_) +
                          " tokens");
  }
  grid_ = grid;
}

TokenMatrix TokenMatrix::batch_item(std::size_t b) const {
  if (b >= batch_) throw InvalidArgument("batch index out of range");
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(b * rows_ * cols_);
  TokenMatrix out(rows_, cols_,
                  std::vector<float>(first, first + static_cast<std::ptrdiff_t>(rows_ * cols_)));
  out.grid_ = grid_;
  return out;
}

bool TokenMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<float> data)
    : n_(n), data_(std::move(data)) {
  if (data_.size() != n * n) {
    throw InvalidArgument("similarity data length does not match N*N");
  }
}

TokenMatrix l2_normalize_rows(const TokenMatrix& x, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  TokenMatrix out = x;
  const std::size_t total_rows = x.batch() * x.rows();
  auto data = out.data();
  parallel_for(total_rows, [&](std::size_t r) {
    std::span<float> row = data.subspan(r * x.cols(), x.cols());
    const double norm = std::sqrt(dot(row, row));
    if (norm < eps) {
      std::fill(row.begin(), row.end(), 0.0f);
      return;
    }
    for (float& v : row) v = static_cast<float>(v / norm);
  });
  return out;
}

SimilarityMatrix cosine_similarity(const TokenMatrix& x) {
  if (x.rows() == 0) throw InvalidArgument("cosine similarity needs N >= 1");
  if (x.batch() != 1) throw InvalidArgument("cosine similarity expects an unbatched matrix");
  if (!x.all_finite()) throw DataError("non-finite embedding");

  const TokenMatrix unit = l2_normalize_rows(x);
  const std::size_t n = x.rows();
  std::vector<float> s(n * n, 0.0f);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      s[i * n + j] = static_cast<float>(dot(unit.row(i), unit.row(j)));
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) s[i * n + j] = s[j * n + i];
  }
  return SimilarityMatrix(n, std::move(s));
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  parallel_for(logits.cols(), [&](std::size_t j) {
    std::vector<double> col(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) col[i] = logits(i, j);
    softmax_inplace(col);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      out(i, j) = static_cast<float>(col[i]);
    }
  });
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  parallel_for(logits.rows(), [&](std::size_t i) {
    std::vector<double> r(logits.row(i).begin(), logits.row(i).end());
    softmax_inplace(r);
    for (std::size_t j = 0; j < r.size(); ++j) out(i, j) = static_cast<float>(r[j]);
  });
  return out;
}

Matrix sdpa(const Matrix& q, const Matrix& k, const Matrix& v, double tau,
            bool scale_by_sqrt_d, SoftmaxAxis axis) {
  if (q.cols() != k.cols()) {
    throw InvalidArgument("sdpa: query/key dims differ (" + shape_of(q) +
                          " vs " + shape_of(k) + ")");
  }
  if (k.rows() != v.rows()) {
    throw InvalidArgument("sdpa: key/value lengths differ (" + shape_of(k) +
                          " vs " + shape_of(v) + ")");
  }
  if (!(tau > 0.0)) throw InvalidArgument("sdpa: tau must be positive");

  const double denom =
      scale_by_sqrt_d ? tau * std::sqrt(static_cast<double>(q.cols())) : tau;
  Matrix logits = matmul_transposed(q, k);
  for (float& e : logits.data()) e = static_cast<float>(e / denom);
  const Matrix weights = axis == SoftmaxAxis::kRows ? softmax_rows(logits)
                                                    : softmax_columns(logits);
  return matmul(weights, v);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: " + shape_of(a) + " * " + shape_of(b));
  }
  Matrix out(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t i) {
    std::vector<double> acc(b.cols(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) acc[j] += aik * brow[j];
    }
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) = static_cast<float>(acc[j]);
  });
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("matmul_transposed: " + shape_of(a) + " * (" +
                          shape_of(b) + ")^T");
  }
  Matrix out(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = static_cast<float>(dot(a.row(i), b.row(j)));
    }
  });
  return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("transposed_matmul: (" + shape_of(a) + ")^T * " +
                          shape_of(b));
  }
  Matrix out(a.cols(), b.cols());
  parallel_for(a.cols(), [&](std::size_t i) {
    std::vector<double> acc(b.cols(), 0.0);
    for (std::size_t k = 0; k < a.rows(); ++k) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) acc[j] += aki * brow[j];
    }
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) = static_cast<float>(acc[j]);
  });
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), x.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= x.rows()) throw InvalidArgument("gather index out of range");
    std::copy(x.row(indices[k]).begin(), x.row(indices[k]).end(), out.row(k).begin());
  }
  return out;
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(dot(a.data(), a.data()));
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.size() != b.size()) throw InvalidArgument("frobenius_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a.data()[i]) - b.data()[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace toma
