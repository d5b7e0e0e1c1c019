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

// Dense float32 substrate shared by every stage of the merge pipeline:
// token matrices, cosine similarity, stable softmax and scaled dot-product
// attention. Storage is float32; every dot product accumulates in double.

#ifndef TOMA_TENSOR_HPP_
#define TOMA_TENSOR_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace toma {

// Spatial layout of a token sequence: token (y, x) lives at row y * width + x.
struct Grid {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return height * width; }
  friend bool operator==(const Grid&, const Grid&) = default;
};

// Row-major [batch x rows x cols] float32 tensor. Unbatched matrices have
// batch() == 1, and the two-index accessors address the first batch item.
// Merge weights, Gram matrices and merged tokens reuse this container.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  TokenMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  TokenMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static TokenMatrix batched(std::size_t batch, std::size_t rows,
                             std::size_t cols, std::vector<float> data);
  static TokenMatrix identity(std::size_t n);
  // Concatenates equally shaped unbatched matrices along the batch axis.
  static TokenMatrix stack(std::span<const TokenMatrix> items);

  std::size_t batch() const { return batch_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  const std::optional<Grid>& grid() const { return grid_; }
  // Throws InvalidArgument unless grid->size() == rows().
  void set_grid(std::optional<Grid> grid);

  float& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  float operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  float& at(std::size_t b, std::size_t i, std::size_t j) {
    return data_[(b * rows_ + i) * cols_ + j];
  }
  float at(std::size_t b, std::size_t i, std::size_t j) const {
    return data_[(b * rows_ + i) * cols_ + j];
  }

  std::span<float> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  // Copy of one batch item as an unbatched matrix (grid preserved).
  TokenMatrix batch_item(std::size_t b) const;

  bool all_finite() const;

  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;

 private:
  std::size_t batch_ = 1;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::optional<Grid> grid_;
  std::vector<float> data_;
};

using Matrix = TokenMatrix;

// Symmetric N x N cosine similarity matrix.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t n, std::vector<float> data);

  std::size_t size() const { return n_; }
  float operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * n_, n_};
  }
  std::span<const float> data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<float> data_;
};

enum class SoftmaxAxis { kRows, kColumns };

inline constexpr double kDefaultNormEps = 1e-12;

// Scales each row to unit L2 norm; rows with norm < eps become zero.
TokenMatrix l2_normalize_rows(const TokenMatrix& x, double eps = kDefaultNormEps);

// S = X^ X^T with X^ = l2_normalize_rows(x). Zero rows have zero
// similarity to everything, themselves included. The result is exactly
// symmetric. Throws DataError("non-finite embedding").
SimilarityMatrix cosine_similarity(const TokenMatrix& x);

// Stable softmax with max subtraction along one axis.
Matrix softmax_columns(const Matrix& logits);
Matrix softmax_rows(const Matrix& logits);

// softmax(Q K^T / (tau * sqrt(d) or tau)) V, softmax along `axis`.
Matrix sdpa(const Matrix& q, const Matrix& k, const Matrix& v, double tau,
            bool scale_by_sqrt_d = true, SoftmaxAxis axis = SoftmaxAxis::kRows);

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
// a^T * b
Matrix transposed_matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Gathers the listed rows of the first batch item, in order.
Matrix gather_rows(const Matrix& x, std::span<const std::size_t> indices);

double frobenius_norm(const Matrix& a);
double frobenius_distance(const Matrix& a, const Matrix& b);

}  // namespace toma

#endif  // TOMA_TENSOR_HPP_
