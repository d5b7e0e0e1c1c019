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

#include "toma/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "toma/errors.hpp"

namespace toma {
namespace {

constexpr char kMagic[4] = {'T', 'O', 'M', 'A'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFFu));
  }
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(bytes[offset + k]) << (8 * k);
  }
  return v;
}

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError(std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const TokenMatrix& x) {
  if (!x.all_finite()) throw DataError("refusing to write non-finite values");
  std::vector<std::uint8_t> out;
  out.reserve(kTensorFileHeaderBytes + 4 * x.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kTensorFileVersion);
  put_u32(out, narrow(x.batch(), "batch"));
  put_u32(out, narrow(x.rows(), "token count"));
  put_u32(out, narrow(x.cols(), "dim"));
  put_u32(out, x.grid() ? narrow(x.grid()->height, "height") : 0);
  put_u32(out, x.grid() ? narrow(x.grid()->width, "width") : 0);
  for (float v : x.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

TokenMatrix decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTensorFileHeaderBytes) throw DataError("tensor file truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("bad tensor file magic");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kTensorFileVersion) {
    throw DataError("unsupported tensor file version " + std::to_string(version));
  }
  const std::uint64_t batch = get_u32(bytes, 8);
  const std::uint64_t rows = get_u32(bytes, 12);
  const std::uint64_t cols = get_u32(bytes, 16);
  const std::uint32_t height = get_u32(bytes, 20);
  const std::uint32_t width = get_u32(bytes, 24);
  if (batch == 0) throw DataError("tensor file has zero batch");

  const std::uint64_t count = batch * rows * cols;
  if (bytes.size() != kTensorFileHeaderBytes + 4 * count) {
    throw DataError("tensor file payload length does not match header");
  }
  if ((height == 0) != (width == 0)) throw DataError("tensor file grid is half specified");
  if (height != 0 && static_cast<std::uint64_t>(height) * width != rows) {
    throw DataError("tensor file grid does not cover the token count");
  }

  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kTensorFileHeaderBytes + 4 * i));
  }
  TokenMatrix x = TokenMatrix::batched(batch, rows, cols, std::move(data));
  if (!x.all_finite()) throw DataError("tensor file contains non-finite values");
  if (height != 0) x.set_grid(Grid{height, width});
  return x;
}

void write_tensor_file(const std::filesystem::path& path, const TokenMatrix& x) {
  const auto bytes = encode_tensor(x);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

TokenMatrix read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace toma
