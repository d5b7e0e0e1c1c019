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

// Region-local merging. A token sequence is split into P equally sized
// regions (whole-row stripes or axis-aligned tiles of the token grid); each
// region gets its own destination budget, greedy selection and merge
// weights. The merged regions are concatenated for the caller's core
// transform and scattered back afterwards.

#ifndef TOMA_LOCALITY_HPP_
#define TOMA_LOCALITY_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toma/merge.hpp"
#include "toma/tensor.hpp"
#include "toma/unmerge.hpp"

namespace toma {

enum class LayoutKind { kGlobal, kStripe, kTile };

std::string to_string(LayoutKind kind);
// Accepts "global", "stripe", "tile"; throws InvalidArgument otherwise.
LayoutKind parse_layout_kind(const std::string& name);

struct PartitionLayout {
  LayoutKind kind = LayoutKind::kGlobal;
  std::size_t n = 0;
  std::size_t regions = 1;
  std::size_t d_total = 0;
  std::optional<Grid> grid;
  // Tile grid (regions = tiles_y * tiles_x); stripes use tiles_x = 1.
  std::size_t tiles_y = 1;
  std::size_t tiles_x = 1;

  std::vector<std::size_t> region_of;    // flat index -> region
  std::vector<std::size_t> local_index;  // flat index -> slot within region
  std::vector<std::size_t> n_loc;        // tokens per region
  std::vector<std::size_t> d_loc;        // destinations per region
  // members[r][j] is the flat index with (region r, slot j).
  std::vector<std::vector<std::size_t>> members;
};

// Builds a layout. Tiles need a grid and P = gh * gw with gh | H, gw | W
// (most-square tiles, larger gh on ties); stripes need P | H (a missing grid
// is treated as N rows of one token); global needs P = 1. Budgets are
// floor(d_total / P) with the remainder going one each to the lowest
// regions. Errors say "layout indivisible" and list the nearest valid P.
PartitionLayout make_layout(LayoutKind kind, std::size_t n, std::optional<Grid> grid,
                            std::size_t regions, std::size_t d_total);

// Region counts make_layout accepts for this kind and shape.
std::vector<std::size_t> valid_region_counts(LayoutKind kind, std::size_t n,
                                             std::optional<Grid> grid);

std::vector<TokenMatrix> gather_regions(const TokenMatrix& x, const PartitionLayout& layout);
TokenMatrix scatter_regions(std::span<const TokenMatrix> parts,
                            const PartitionLayout& layout);

struct MergeConfig {
  MergeOptions merge;
  UnmergeMode unmerge = UnmergeMode::kTranspose;
  double ridge = 0.0;
};

// Maps the concatenated merged tokens (D_total x d) to new values; must keep
// the row count.
using CoreTransform = std::function<TokenMatrix(const TokenMatrix&)>;

// Merge weights of every region of one (unbatched) token matrix.
using MergePlan = std::vector<MergeWeights>;

// Greedy selection + attention weights in each region.
MergePlan plan_merge(const TokenMatrix& x, const PartitionLayout& layout,
                     const MergeOptions& options);

// Recomputes only the weights, keeping each region's destination indices.
MergePlan replan_weights(const TokenMatrix& x, const PartitionLayout& layout,
                         const MergePlan& previous, const MergeOptions& options);

// Concatenated merged tokens, regions in id order (D_total x d).
TokenMatrix merge_regions(const TokenMatrix& x, const PartitionLayout& layout,
                          const MergePlan& plan);

// Inverse direction: split rows per region, unmerge, scatter (N x d).
TokenMatrix unmerge_regions(const TokenMatrix& merged, const PartitionLayout& layout,
                            const MergePlan& plan, const MergeConfig& config);

// merge -> core -> unmerge with an existing plan.
TokenMatrix run_plan(const TokenMatrix& x, const PartitionLayout& layout,
                     const MergePlan& plan, const MergeConfig& config,
                     const CoreTransform& core);

// Full region-local pipeline. Batched input runs each item independently.
TokenMatrix local_pipeline(const TokenMatrix& x, const PartitionLayout& layout,
                           const MergeConfig& config, const CoreTransform& core);

// The same pipeline on the whole sequence, written without any layout.
TokenMatrix global_pipeline(const TokenMatrix& x, std::size_t destinations,
                            const MergeConfig& config, const CoreTransform& core);

}  // namespace toma

#endif  // TOMA_LOCALITY_HPP_
