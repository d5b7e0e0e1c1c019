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

#include "toma/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "toma/errors.hpp"
#include "toma/parallel.hpp"
#include "toma/submodular.hpp"

namespace toma {
namespace {

std::vector<std::size_t> divisors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= n; ++k) {
    if (n % k == 0) out.push_back(k);
  }
  return out;
}

// (gh, gw) candidates for a tile layout with `regions` tiles.
std::vector<std::pair<std::size_t, std::size_t>> tile_factorizations(const Grid& grid,
                                                                     std::size_t regions) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t gh : divisors(grid.height)) {
    if (regions % gh != 0) continue;
    const std::size_t gw = regions / gh;
    if (grid.width % gw == 0) out.emplace_back(gh, gw);
  }
  return out;
}

[[noreturn]] void throw_indivisible(const std::string& why, LayoutKind kind, std::size_t n,
                                    std::optional<Grid> grid, std::size_t regions) {
  const auto valid = valid_region_counts(kind, n, grid);
  std::ostringstream msg;
  msg << "layout indivisible: " << why;
  if (!valid.empty()) {
    auto above = std::lower_bound(valid.begin(), valid.end(), regions);
    msg << "; nearest valid region counts:";
    if (above != valid.begin()) msg << " " << *(above - 1);
    if (above != valid.end()) msg << " " << *above;
  }
  throw InvalidArgument(msg.str());
}

void assign(PartitionLayout& layout, std::size_t flat, std::size_t region) {
  layout.region_of[flat] = region;
  layout.local_index[flat] = layout.members[region].size();
  layout.members[region].push_back(flat);
}

}  // namespace

std::string to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::kGlobal: return "global";
    case LayoutKind::kStripe: return "stripe";
    case LayoutKind::kTile: return "tile";
  }
  return "unknown";
}

LayoutKind parse_layout_kind(const std::string& name) {
  if (name == "global") return LayoutKind::kGlobal;
  if (name == "stripe") return LayoutKind::kStripe;
  if (name == "tile") return LayoutKind::kTile;
  throw InvalidArgument("unknown layout '" + name + "' (expected global, stripe or tile)");
}

std::vector<std::size_t> valid_region_counts(LayoutKind kind, std::size_t n,
                                             std::optional<Grid> grid) {
  switch (kind) {
    case LayoutKind::kGlobal:
      return {1};
    case LayoutKind::kStripe:
      return divisors(grid ? grid->height : n);
    case LayoutKind::kTile: {
      if (!grid) return {};
      std::vector<std::size_t> out;
      for (std::size_t gh : divisors(grid->height)) {
        for (std::size_t gw : divisors(grid->width)) out.push_back(gh * gw);
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    }
  }
  return {};
}

PartitionLayout make_layout(LayoutKind kind, std::size_t n, std::optional<Grid> grid,
                            std::size_t regions, std::size_t d_total) {
  if (n == 0) throw InvalidArgument("layout needs at least one token");
  if (grid && grid->size() != n) {
    throw InvalidArgument("grid does not cover " + std::to_string(n) + " tokens");
  }
  if (regions == 0) throw_indivisible("zero regions", kind, n, grid, regions);
  if (d_total < regions) {
    throw InvalidArgument("destination budget " + std::to_string(d_total) +
                          " is smaller than the region count " + std::to_string(regions));
  }
  if (d_total > n) {
    throw InvalidArgument("destination budget " + std::to_string(d_total) +
                          " exceeds the token count " + std::to_string(n));
  }

  PartitionLayout layout;
  layout.kind = kind;
  layout.n = n;
  layout.regions = regions;
  layout.d_total = d_total;
  layout.grid = grid;
  layout.region_of.assign(n, 0);
  layout.local_index.assign(n, 0);
  layout.members.assign(regions, {});

  switch (kind) {
    case LayoutKind::kGlobal: {
      if (regions != 1) throw_indivisible("global layout has exactly one region", kind, n, grid, regions);
      for (std::size_t i = 0; i < n; ++i) assign(layout, i, 0);
      break;
    }
    case LayoutKind::kStripe: {
      const std::size_t height = grid ? grid->height : n;
      if (height % regions != 0) {
        throw_indivisible(std::to_string(regions) + " stripes do not divide " +
                              std::to_string(height) + " rows",
                          kind, n, grid, regions);
      }
      const std::size_t per_region = n / regions;
      layout.tiles_y = regions;
      for (std::size_t i = 0; i < n; ++i) assign(layout, i, i / per_region);
      break;
    }
    case LayoutKind::kTile: {
      if (!grid) throw InvalidArgument("tile layout requires a token grid");
      const auto candidates = tile_factorizations(*grid, regions);
      if (candidates.empty()) {
        throw_indivisible(std::to_string(regions) + " tiles do not divide a " +
                              std::to_string(grid->height) + "x" +
                              std::to_string(grid->width) + " grid",
                          kind, n, grid, regions);
      }
      // Most-square tiles: gh / gw closest to H / W in log space.
      auto skew = [&](const std::pair<std::size_t, std::size_t>& c) {
        return std::abs(std::log(static_cast<double>(c.first * grid->width)) -
                        std::log(static_cast<double>(c.second * grid->height)));
      };
      auto best = candidates.front();
      for (const auto& c : candidates) {
        const double diff = skew(c) - skew(best);
        if (diff < -1e-12 || (std::abs(diff) <= 1e-12 && c.first > best.first)) best = c;
      }
      layout.tiles_y = best.first;
      layout.tiles_x = best.second;
      const std::size_t tile_h = grid->height / best.first;
      const std::size_t tile_w = grid->width / best.second;
      for (std::size_t ty = 0; ty < best.first; ++ty) {
        for (std::size_t tx = 0; tx < best.second; ++tx) {
          const std::size_t region = ty * best.second + tx;
          for (std::size_t y = ty * tile_h; y < (ty + 1) * tile_h; ++y) {
            for (std::size_t x = tx * tile_w; x < (tx + 1) * tile_w; ++x) {
              assign(layout, y * grid->width + x, region);
            }
          }
        }
      }
      break;
    }
  }

  layout.n_loc.resize(regions);
  layout.d_loc.resize(regions);
  for (std::size_t r = 0; r < regions; ++r) {
    layout.n_loc[r] = layout.members[r].size();
    layout.d_loc[r] = d_total / regions + (r < d_total % regions ? 1 : 0);
  }
  return layout;
}

std::vector<TokenMatrix> gather_regions(const TokenMatrix& x, const PartitionLayout& layout) {
  if (x.batch() != 1) throw InvalidArgument("gather_regions expects an unbatched matrix");
  if (x.rows() != layout.n) {
    throw InvalidArgument("layout covers " + std::to_string(layout.n) +
                          " tokens, input has " + std::to_string(x.rows()));
  }
  std::vector<TokenMatrix> parts;
  parts.reserve(layout.regions);
  for (const auto& members : layout.members) parts.push_back(gather_rows(x, members));
  return parts;
}

TokenMatrix scatter_regions(std::span<const TokenMatrix> parts,
                            const PartitionLayout& layout) {
  if (parts.size() != layout.regions) {
    throw InvalidArgument("expected " + std::to_string(layout.regions) + " regions, got " +
                          std::to_string(parts.size()));
  }
  const std::size_t cols = parts.empty() ? 0 : parts.front().cols();
  TokenMatrix out(layout.n, cols);
  for (std::size_t r = 0; r < layout.regions; ++r) {
    const auto& part = parts[r];
    if (part.rows() != layout.n_loc[r] || part.cols() != cols || part.batch() != 1) {
      throw InvalidArgument("region " + std::to_string(r) + " has the wrong shape");
    }
    for (std::size_t j = 0; j < part.rows(); ++j) {
      const auto src = part.row(j);
      std::copy(src.begin(), src.end(), out.row(layout.members[r][j]).begin());
    }
  }
  if (layout.grid) out.set_grid(layout.grid);
  return out;
}

MergePlan plan_merge(const TokenMatrix& x, const PartitionLayout& layout,
                     const MergeOptions& options) {
  const auto parts = gather_regions(x, layout);
  MergePlan plan(layout.regions);
  parallel_for(layout.regions, [&](std::size_t r) {
    const SimilarityMatrix s = cosine_similarity(parts[r]);
    const DestinationSet dest = greedy_select(s, layout.d_loc[r]);
    plan[r] = attention_merge_weights(parts[r], dest, options);
  });
  return plan;
}

MergePlan replan_weights(const TokenMatrix& x, const PartitionLayout& layout,
                         const MergePlan& previous, const MergeOptions& options) {
  if (previous.size() != layout.regions) throw InvalidArgument("plan/layout region mismatch");
  const auto parts = gather_regions(x, layout);
  MergePlan plan(layout.regions);
  parallel_for(layout.regions, [&](std::size_t r) {
    plan[r] = attention_merge_weights(parts[r], previous[r].dest, options);
  });
  return plan;
}

TokenMatrix merge_regions(const TokenMatrix& x, const PartitionLayout& layout,
                          const MergePlan& plan) {
  if (plan.size() != layout.regions) throw InvalidArgument("plan/layout region mismatch");
  const auto parts = gather_regions(x, layout);
  std::vector<TokenMatrix> merged(layout.regions);
  parallel_for(layout.regions, [&](std::size_t r) { merged[r] = apply_merge(plan[r], parts[r]); });

  TokenMatrix out(layout.d_total, x.cols());
  std::size_t offset = 0;
  for (const auto& m : merged) {
    std::copy(m.data().begin(), m.data().end(), out.data().begin() + offset * x.cols());
    offset += m.rows();
  }
  return out;
}

TokenMatrix unmerge_regions(const TokenMatrix& merged, const PartitionLayout& layout,
                            const MergePlan& plan, const MergeConfig& config) {
  if (plan.size() != layout.regions) throw InvalidArgument("plan/layout region mismatch");
  if (merged.rows() != layout.d_total) {
    throw InvalidArgument("merged tokens have " + std::to_string(merged.rows()) +
                          " rows, layout expects " + std::to_string(layout.d_total));
  }
  std::vector<std::size_t> offsets(layout.regions, 0);
  for (std::size_t r = 1; r < layout.regions; ++r) {
    offsets[r] = offsets[r - 1] + plan[r - 1].destinations();
  }
  std::vector<TokenMatrix> restored(layout.regions);
  parallel_for(layout.regions, [&](std::size_t r) {
    const std::size_t rows = plan[r].destinations();
    const auto first = merged.data().begin() + offsets[r] * merged.cols();
    TokenMatrix slice(rows, merged.cols(),
                      std::vector<float>(first, first + rows * merged.cols()));
    restored[r] = unmerge(plan[r], slice, config.unmerge, config.ridge);
  });
  return scatter_regions(restored, layout);
}

TokenMatrix run_plan(const TokenMatrix& x, const PartitionLayout& layout,
                     const MergePlan& plan, const MergeConfig& config,
                     const CoreTransform& core) {
  const TokenMatrix merged = merge_regions(x, layout, plan);
  const TokenMatrix processed = core ? core(merged) : merged;
  if (processed.rows() != merged.rows()) {
    throw InvalidArgument("core transform changed the merged token count");
  }
  return unmerge_regions(processed, layout, plan, config);
}

TokenMatrix local_pipeline(const TokenMatrix& x, const PartitionLayout& layout,
                           const MergeConfig& config, const CoreTransform& core) {
  if (!(config.merge.tau > 0.0)) throw InvalidArgument("tau must be positive");
  std::vector<TokenMatrix> outputs;
  outputs.reserve(x.batch());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    const TokenMatrix item = x.batch() == 1 ? x : x.batch_item(b);
    const MergePlan plan = plan_merge(item, layout, config.merge);
    outputs.push_back(run_plan(item, layout, plan, config, core));
  }
  if (outputs.size() == 1) return std::move(outputs.front());
  return TokenMatrix::stack(outputs);
}

TokenMatrix global_pipeline(const TokenMatrix& x, std::size_t destinations,
                            const MergeConfig& config, const CoreTransform& core) {
  const SimilarityMatrix s = cosine_similarity(x);
  const DestinationSet dest = greedy_select(s, destinations);
  const MergeWeights w = attention_merge_weights(x, dest, config.merge);
  const TokenMatrix merged = apply_merge(w, x);
  const TokenMatrix processed = core ? core(merged) : merged;
  TokenMatrix out = unmerge(w, processed, config.unmerge, config.ridge);
  if (x.grid()) out.set_grid(x.grid());
  return out;
}

}  // namespace toma
