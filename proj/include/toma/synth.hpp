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

// Synthetic stand-ins for diffusion hidden states: spatially smooth Gaussian
// token fields on an H x W grid, and slowly drifting sequences of them.

#ifndef TOMA_SYNTH_HPP_
#define TOMA_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "toma/tensor.hpp"

namespace toma {

struct SynthConfig {
  Grid grid{16, 16};
  std::size_t d = 16;
  double smooth_sigma = 2.0;  // blur std-dev in grid cells; 0 = no blur
  double drift = 0.1;         // per-step mixing coefficient in [0, 1]
  std::size_t steps = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Unit-variance white noise, one draw per (token, channel) in row-major order.
TokenMatrix white_noise(const SynthConfig& cfg, std::mt19937_64& rng);

// Per-channel separable Gaussian blur over the token grid with reflect
// padding (d c b a | a b c d | d c b a). sigma = 0 returns the input.
TokenMatrix gaussian_blur(const TokenMatrix& field, double sigma);

// Blurred white noise rescaled to unit variance per channel. Variance is
// the second moment about zero (the noise mean); the empirical mean is kept.
// With smooth_sigma = 0 the raw noise is returned untouched.
TokenMatrix generate_field(const SynthConfig& cfg);

// X_0 = generate_field(cfg);
// X_{t+1} = sqrt(1 - drift^2) X_t + drift F_t, where F_t is a fresh field
// made orthogonal to X_t per channel and scaled to X_t's channel variance
// (both about zero), so every step keeps the per-channel variance of X_0.
std::vector<TokenMatrix> drift_sequence(const SynthConfig& cfg);

}  // namespace toma

#endif  // TOMA_SYNTH_HPP_
