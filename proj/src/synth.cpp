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

#include "toma/synth.hpp"

#include <cmath>

#include "toma/errors.hpp"
#include "toma/parallel.hpp"

namespace toma {
namespace {

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return m < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(m)
                                            : static_cast<std::size_t>(period - 1 - m);
}

std::vector<double> gaussian_kernel(double sigma) {
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (std::ptrdiff_t o = -half; o <= half; ++o) {
    const double v = std::exp(-0.5 * (o * o) / (sigma * sigma));
    k[static_cast<std::size_t>(o + half)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

// Second moment about zero, the process mean. Subtracting the empirical
// mean would strip the slowly varying part that heavy blurs leave behind.
double mean_square(const TokenMatrix& x, std::size_t c) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) total += double(x(i, c)) * x(i, c);
  return total / static_cast<double>(x.rows());
}

void standardize(TokenMatrix& x) {
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double ms = mean_square(x, c);
    const double scale = ms > 0.0 ? 1.0 / std::sqrt(ms) : 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, c) = static_cast<float>(x(i, c) * scale);
  }
}

TokenMatrix smooth_field(const SynthConfig& cfg, std::mt19937_64& rng) {
  TokenMatrix noise = white_noise(cfg, rng);
  if (cfg.smooth_sigma == 0.0) return noise;
  TokenMatrix field = gaussian_blur(noise, cfg.smooth_sigma);
  standardize(field);
  return field;
}

// fresh minus its projection on x, rescaled to x's second moment.
void orthogonalize_against(TokenMatrix& fresh, const TokenMatrix& x) {
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double mx = mean_square(x, c);
    double cross = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) cross += double(fresh(i, c)) * x(i, c);
    const double coef = mx > 0.0 ? cross / (n * mx) : 0.0;
    std::vector<double> residual(x.rows());
    double ms = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      residual[i] = fresh(i, c) - coef * x(i, c);
      ms += residual[i] * residual[i];
    }
    ms /= n;
    const double scale = ms > 0.0 ? std::sqrt(mx / ms) : 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      fresh(i, c) = static_cast<float>(residual[i] * scale);
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (grid.height < 1 || grid.width < 1 || d < 1 || steps < 1) {
    throw InvalidArgument("height, width, dim and steps must be >= 1");
  }
  if (!(smooth_sigma >= 0.0) || !std::isfinite(smooth_sigma)) {
    throw InvalidArgument("smooth_sigma must be finite and >= 0");
  }
  if (!(drift >= 0.0 && drift <= 1.0)) throw InvalidArgument("drift must lie in [0, 1]");
}

TokenMatrix white_noise(const SynthConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  TokenMatrix out(cfg.grid.size(), cfg.d);
  for (float& v : out.data()) v = static_cast<float>(normal(rng));
  out.set_grid(cfg.grid);
  return out;
}

TokenMatrix gaussian_blur(const TokenMatrix& field, double sigma) {
  if (!field.grid()) throw InvalidArgument("gaussian_blur needs a token grid");
  if (sigma == 0.0) return field;
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be >= 0");

  const Grid g = *field.grid();
  const std::size_t d = field.cols();
  const auto kernel = gaussian_kernel(sigma);
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);

  // Horizontal pass, then vertical, each accumulated in double.
  std::vector<double> horizontal(field.size(), 0.0);
  parallel_for(g.height, [&](std::size_t y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      double* out = &horizontal[(y * g.width + x) * d];
      for (std::ptrdiff_t o = -half; o <= half; ++o) {
        const std::size_t sx = reflect(static_cast<std::ptrdiff_t>(x) + o, g.width);
        const double w = kernel[static_cast<std::size_t>(o + half)];
        const auto src = field.row(y * g.width + sx);
        for (std::size_t c = 0; c < d; ++c) out[c] += w * src[c];
      }
    }
  });

  TokenMatrix out(field.rows(), d);
  parallel_for(g.height, [&](std::size_t y) {
    std::vector<double> acc(d);
    for (std::size_t x = 0; x < g.width; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::ptrdiff_t o = -half; o <= half; ++o) {
        const std::size_t sy = reflect(static_cast<std::ptrdiff_t>(y) + o, g.height);
        const double w = kernel[static_cast<std::size_t>(o + half)];
        const double* src = &horizontal[(sy * g.width + x) * d];
        for (std::size_t c = 0; c < d; ++c) acc[c] += w * src[c];
      }
      for (std::size_t c = 0; c < d; ++c) out(y * g.width + x, c) = static_cast<float>(acc[c]);
    }
  });
  out.set_grid(g);
  return out;
}

TokenMatrix generate_field(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  return smooth_field(cfg, rng);
}

std::vector<TokenMatrix> drift_sequence(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::vector<TokenMatrix> states;
  states.reserve(cfg.steps);
  states.push_back(smooth_field(cfg, rng));

  const double keep = std::sqrt(1.0 - cfg.drift * cfg.drift);
  for (std::size_t t = 1; t < cfg.steps; ++t) {
    const TokenMatrix& prev = states.back();
    if (cfg.drift == 0.0) {
      states.push_back(prev);
      continue;
    }
    TokenMatrix fresh = smooth_field(cfg, rng);
    orthogonalize_against(fresh, prev);
    TokenMatrix next(prev.rows(), prev.cols());
    for (std::size_t i = 0; i < next.size(); ++i) {
      next.data()[i] = static_cast<float>(keep * prev.data()[i] + cfg.drift * fresh.data()[i]);
    }
    next.set_grid(cfg.grid);
    states.push_back(std::move(next));
  }
  return states;
}

}  // namespace toma
