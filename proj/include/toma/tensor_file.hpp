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

// Binary token tensor files. All integers are unsigned 32-bit little endian.
//
//   offset  size  field
//   0       4     magic "TOMA"
//   4       4     version (1)
//   8       12    B, N, d
//   20      8     H, W (both 0 when the tokens have no grid)
//   28      4BNd  IEEE-754 binary32 little-endian payload, row-major [B][N][d]

#ifndef TOMA_TENSOR_FILE_HPP_
#define TOMA_TENSOR_FILE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "toma/tensor.hpp"

namespace toma {

inline constexpr std::uint32_t kTensorFileVersion = 1;
inline constexpr std::size_t kTensorFileHeaderBytes = 28;

// Throws DataError on non-finite values.
std::vector<std::uint8_t> encode_tensor(const TokenMatrix& x);
// Throws DataError on a bad magic, version, length or grid.
TokenMatrix decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor_file(const std::filesystem::path& path, const TokenMatrix& x);
TokenMatrix read_tensor_file(const std::filesystem::path& path);

}  // namespace toma

#endif  // TOMA_TENSOR_FILE_HPP_
