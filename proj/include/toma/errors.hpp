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

#ifndef TOMA_ERRORS_HPP_
#define TOMA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace toma {

// Base of every error raised by the library. The three subclasses map onto
// the CLI exit codes 1 (usage), 2 (data) and 3 (numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates a precondition (bad shape, bad ratio,
// indivisible layout, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is malformed: non-finite embeddings, corrupt tensor files.
class DataError : public Error {
 public:
  using Error::Error;
};

// A numerical routine could not produce a result (rank-deficient Gram).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace toma

#endif  // TOMA_ERRORS_HPP_
