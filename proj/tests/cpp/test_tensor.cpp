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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"
#include "toma/errors.hpp"
#include "toma/parallel.hpp"
#include "toma/tensor.hpp"

namespace toma {
namespace {

using testing::Dense;

TEST(TokenMatrix, ShapeChecks) {
  EXPECT_THROW(TokenMatrix(2, 3, std::vector<float>(5)), InvalidArgument);
  TokenMatrix x(6, 2);
  EXPECT_THROW(x.set_grid(Grid{2, 2}), InvalidArgument);
  x.set_grid(Grid{2, 3});
  EXPECT_EQ(x.grid()->size(), 6u);
  auto b = TokenMatrix::batched(2, 3, 1, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(b.batch_item(1)(0, 0), 4.0f);
  EXPECT_EQ(b.size(), 6u);
}

TEST(TokenMatrix, StackInvertsBatchItem) {
  auto b = TokenMatrix::batched(3, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  std::vector<TokenMatrix> items = {b.batch_item(0), b.batch_item(1), b.batch_item(2)};
  EXPECT_EQ(TokenMatrix::stack(items), b);
}

TEST(L2Normalize, Examples) {
  const auto a = l2_normalize_rows(TokenMatrix(1, 2, {3, 4}));
  EXPECT_NEAR(a(0, 0), 0.6, 1e-7);
  EXPECT_NEAR(a(0, 1), 0.8, 1e-7);
  const auto z = l2_normalize_rows(TokenMatrix(1, 2, {0, 0}), 1e-12);
  EXPECT_EQ(z(0, 0), 0.0f);
  EXPECT_EQ(z(0, 1), 0.0f);
  const auto e = l2_normalize_rows(TokenMatrix(1, 3, {2, 0, 0}));
  EXPECT_EQ(e(0, 0), 1.0f);
  EXPECT_EQ(e(0, 1), 0.0f);
  EXPECT_THROW(l2_normalize_rows(TokenMatrix(1, 2, {1, 1}), 0.0), InvalidArgument);
}

TEST(CosineSimilarity, Examples) {
  EXPECT_NEAR(cosine_similarity(TokenMatrix(2, 2, {1, 2, 1, 2}))(0, 1), 1.0, 1e-6);
  EXPECT_NEAR(cosine_similarity(TokenMatrix(2, 2, {1, 0, 0, 1}))(0, 1), 0.0, 1e-7);
  EXPECT_NEAR(cosine_similarity(TokenMatrix(2, 2, {1, 0, -1, 0}))(0, 1), -1.0, 1e-7);
}

TEST(CosineSimilarity, RejectsNonFinite) {
  TokenMatrix x(2, 2, {1, std::numeric_limits<float>::quiet_NaN(), 0, 1});
  try {
    cosine_similarity(x);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite embedding"), std::string::npos);
  }
  EXPECT_THROW(cosine_similarity(TokenMatrix(2, 1, {1, INFINITY})), DataError);
}

TEST(CosineSimilarity, ZeroTokenConvention) {
  const auto s = cosine_similarity(TokenMatrix(2, 2, {0, 0, 1, 1}));
  EXPECT_EQ(s(0, 0), 0.0f);
  EXPECT_EQ(s(0, 1), 0.0f);
  EXPECT_NEAR(s(1, 1), 1.0, 1e-6);
}

TEST(CosineSimilarity, MatchesNaiveOracleAndInvariants) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto x = testing::gaussian_tokens(1 + t * 3, 1 + t % 7, rng);
    const auto s = cosine_similarity(x);
    const Dense ref = testing::naive_cosine(x);
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_NEAR(s(i, i), 1.0, 1e-6);
      for (std::size_t j = 0; j < s.size(); ++j) {
        EXPECT_NEAR(s(i, j), ref(i, j), 1e-6);
        EXPECT_NEAR(s(i, j), s(j, i), 1e-6);
        EXPECT_LE(std::abs(s(i, j)), 1.0 + 1e-6);
      }
    }
  }
}

TEST(CosineSimilarity, InvariantToPositiveRowScaling) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  auto x = testing::gaussian_tokens(15, 6, rng);
  auto y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const double c = scale(rng);
    for (float& v : y.row(i)) v = static_cast<float>(v * c);
  }
  const auto a = cosine_similarity(x);
  const auto b = cosine_similarity(y);
  for (std::size_t i = 0; i < a.data().size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-6);
}

TEST(Softmax, ColumnExamples) {
  auto s = softmax_columns(Matrix(2, 1, {0, 0}));
  EXPECT_NEAR(s(0, 0), 0.5, 1e-7);
  s = softmax_columns(Matrix(2, 1, {1000, 1000}));
  EXPECT_NEAR(s(0, 0), 0.5, 1e-7);
  EXPECT_NEAR(s(1, 0), 0.5, 1e-7);
  s = softmax_columns(Matrix(2, 1, {static_cast<float>(std::log(2.0)), 0}));
  EXPECT_NEAR(s(0, 0), 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(s(1, 0), 1.0 / 3.0, 1e-6);
}

TEST(Softmax, ColumnsSumToOneForLargeLogits) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1e4, 1e4);
  Matrix m(7, 9);
  for (float& v : m.data()) v = static_cast<float>(uni(rng));
  const auto s = softmax_columns(m);
  for (std::size_t j = 0; j < 9; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_GE(s(i, j), 0.0f);
      total += s(i, j);
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
  const auto r = softmax_rows(m);
  for (std::size_t i = 0; i < 7; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < 9; ++j) total += r(i, j);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Sdpa, IdentityInputs) {
  const auto eye = Matrix::identity(2);
  const auto out = sdpa(eye, eye, eye, 1.0, false, SoftmaxAxis::kRows);
  const double big = std::exp(1.0) / (std::exp(1.0) + 1.0);
  EXPECT_NEAR(out(0, 0), big, 1e-6);
  EXPECT_NEAR(out(0, 1), 1.0 - big, 1e-6);
  EXPECT_NEAR(out(1, 0) + out(1, 1), 1.0, 1e-6);
}

TEST(Sdpa, IdentityValueReturnsAttention) {
  std::mt19937_64 rng(4);
  const auto q = testing::gaussian_tokens(4, 5, rng);
  const auto k = testing::gaussian_tokens(6, 5, rng);
  const auto attn = sdpa(q, k, Matrix::identity(6), 0.7, true, SoftmaxAxis::kRows);
  Matrix logits = matmul_transposed(q, k);
  for (float& v : logits.data()) v = static_cast<float>(v / (0.7 * std::sqrt(5.0)));
  const auto ref = softmax_rows(logits);
  EXPECT_LT(testing::max_abs_diff(attn, ref), 1e-6);

  const auto cols = sdpa(q, k, Matrix::identity(6), 0.7, true, SoftmaxAxis::kColumns);
  for (std::size_t j = 0; j < 6; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) total += cols(i, j);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Sdpa, LowTemperatureApproachesArgmax) {
  std::mt19937_64 rng(5);
  const auto q = testing::gaussian_tokens(5, 4, rng);
  const auto k = testing::gaussian_tokens(7, 4, rng);
  const auto v = testing::gaussian_tokens(7, 3, rng);
  const auto out = sdpa(q, k, v, 1e-3, false, SoftmaxAxis::kRows);
  const auto logits = matmul_transposed(q, k);
  for (std::size_t i = 0; i < 5; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < 7; ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(i, c), v(best, c), 1e-4);
  }
}

TEST(Sdpa, Errors) {
  const Matrix a(2, 3), b(2, 4), v(2, 2);
  EXPECT_THROW(sdpa(a, b, v, 1.0), InvalidArgument);
  EXPECT_THROW(sdpa(a, a, Matrix(3, 2), 1.0), InvalidArgument);
  EXPECT_THROW(sdpa(a, a, v, 0.0), InvalidArgument);
  EXPECT_THROW(sdpa(a, a, v, -1.0), InvalidArgument);
}

TEST(Products, MatchEigen) {
  std::mt19937_64 rng(6);
  const auto a = testing::gaussian_tokens(7, 5, rng);
  const auto b = testing::gaussian_tokens(5, 4, rng);
  const auto c = testing::gaussian_tokens(7, 4, rng);
  const Dense ea = testing::to_dense(a), eb = testing::to_dense(b), ec = testing::to_dense(c);
  EXPECT_LT((testing::to_dense(matmul(a, b)) - ea * eb).norm(), 1e-5);
  EXPECT_LT((testing::to_dense(transposed_matmul(a, c)) - ea.transpose() * ec).norm(), 1e-5);
  EXPECT_EQ(testing::to_dense(transpose(a)), ea.transpose());
  EXPECT_THROW(matmul(a, a), InvalidArgument);
  EXPECT_NEAR(frobenius_norm(a), ea.norm(), 1e-5);
  const auto a4 = testing::gaussian_tokens(7, 4, rng);
  EXPECT_NEAR(frobenius_distance(a4, c), (testing::to_dense(a4) - ec).norm(), 1e-5);
  EXPECT_LT((testing::to_dense(matmul_transposed(c, a4)) - ec * testing::to_dense(a4).transpose()).norm(),
            1e-5);
  EXPECT_THROW(frobenius_distance(a, c), InvalidArgument);
}

TEST(Products, GatherRows) {
  const TokenMatrix x(3, 2, {1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> idx = {2, 0};
  EXPECT_EQ(gather_rows(x, idx), TokenMatrix(2, 2, {5, 6, 1, 2}));
  const std::vector<std::size_t> bad = {3};
  EXPECT_THROW(gather_rows(x, bad), InvalidArgument);
}

TEST(Parallel, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(7);
  const auto x = testing::gaussian_tokens(300, 24, rng);
  const std::size_t saved = num_threads();
  set_num_threads(1);
  const auto s1 = cosine_similarity(x);
  const auto m1 = matmul_transposed(x, x);
  set_num_threads(4);
  const auto s4 = cosine_similarity(x);
  const auto m4 = matmul_transposed(x, x);
  set_num_threads(saved);
  EXPECT_TRUE(std::equal(s1.data().begin(), s1.data().end(), s4.data().begin()));
  EXPECT_EQ(m1, m4);
}

TEST(Parallel, PropagatesExceptionsAndNests) {
  set_num_threads(3);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw DataError("boom");
               }),
               DataError);
  std::vector<int> hits(20, 0);
  parallel_for(4, [&](std::size_t i) {
    parallel_for(5, [&](std::size_t j) { hits[i * 5 + j] += 1; });
  });
  for (int h : hits) EXPECT_EQ(h, 1);
  set_num_threads(0);
}

}  // namespace
}  // namespace toma
