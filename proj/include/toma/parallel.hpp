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

#ifndef TOMA_PARALLEL_HPP_
#define TOMA_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace toma {

// Caps the number of worker threads used by parallel_for. 0 restores the
// default (hardware concurrency).
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(i) for i in [0, n), splitting the range into contiguous chunks.
// Every index is handled by exactly one call, so work that writes only to
// slot i and reduces in a fixed order inside the body is bit-identical for
// any thread count. Exceptions thrown by the body are rethrown on the
// calling thread (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace toma

#endif  // TOMA_PARALLEL_HPP_
