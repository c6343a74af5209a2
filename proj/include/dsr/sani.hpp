// Copyright (c) the dsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/descriptor.hpp"
#include "dsr/ops.hpp"
#include "dsr/rng.hpp"
#include "dsr/schedule.hpp"
#include "dsr/tensor.hpp"

// Edge-modulated training noise. Only the forward (noising) side lives here;
// sampling is untouched.
namespace dsr {

inline constexpr double kDefaultLambda = 0.6;

// Sobel gradient magnitude of the grayscale image, [H, W].
inline Tensor edge_strength(const Image& lr) {
  if (lr.height() < 3 || lr.width() < 3) {
    throw std::invalid_argument("edge_strength: image must be at least 3x3");
  }
  return sobel_magnitude(grayscale(lr));
}

// Per-image min-max normalisation to [0,1]; a flat map becomes all zeros.
inline Tensor normalize_edge_map(const Tensor& raw) {
  const double lo = raw.min(), hi = raw.max();
  Tensor out(raw.shape());
  if (!(hi > lo)) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::clamp((raw[i] - lo) / range, 0.0, 1.0);
  }
  return out;
}

inline Tensor to_latent(const Tensor& normalized, std::size_t h, std::size_t w) {
  return bilinear_resize(normalized, h, w);
}

struct EdgeMap {
  Tensor raw;         // LR resolution
  Tensor normalized;  // LR resolution, [0,1]
  Tensor latent;      // h x w, [0,1]
};

// Extract at LR resolution, normalise, then resample to the latent grid.
inline EdgeMap edge_map(const Image& lr, std::size_t h, std::size_t w) {
  EdgeMap e;
  e.raw = edge_strength(lr);
  e.normalized = normalize_edge_map(e.raw);
  e.latent = to_latent(e.normalized, h, w);
  return e;
}

// eps'[c,y,x] = eps[c,y,x] * (1 - lambda * E[y,x]); E is shared by all
// channels.
inline Tensor modulate_noise(const Tensor& eps, const Tensor& edge,
                             double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("modulate_noise: lambda must be in [0,1]");
  }
  if (eps.rank() != 3) {
    throw std::invalid_argument("modulate_noise: noise must be [C,h,w]");
  }
  const auto [h, w] = plane_dims(edge);
  if (eps.extent(1) != h || eps.extent(2) != w) {
    throw std::invalid_argument("modulate_noise: edge map " +
                                shape_string(edge.shape()) +
                                " does not match noise " +
                                shape_string(eps.shape()));
  }
  const std::size_t plane = h * w;
  Tensor out(eps.shape());
  for (std::size_t c = 0; c < eps.extent(0); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] = eps[c * plane + i] * (1.0 - lambda * edge[i]);
    }
  }
  return out;
}

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps'.
inline Tensor noisy_latent(const Tensor& z0, const Tensor& eps_prime,
                           std::size_t t, const DiffusionSchedule& schedule) {
  if (z0.shape() != eps_prime.shape()) {
    throw std::invalid_argument("noisy_latent: shape mismatch " +
                                shape_string(z0.shape()) + " vs " +
                                shape_string(eps_prime.shape()));
  }
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab), noise = std::sqrt(1.0 - ab);
  Tensor out(z0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = signal * z0[i] + noise * eps_prime[i];
  }
  return out;
}

struct SaniStats {
  double lambda = kDefaultLambda;
  std::vector<double> edge_levels;
  std::vector<double> empirical_mean;
  std::vector<double> empirical_std;
  std::vector<double> theoretical_std;  // 1 - lambda * E
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

// Monte-Carlo amplitude check of the modulated noise at fixed edge levels.
// Level k draws its samples from Rng::derive(seed, k).
inline SaniStats sani_stats(double lambda, std::size_t samples,
                            std::uint64_t seed,
                            std::vector<double> edge_levels = {0.0, 0.25, 0.5,
                                                               0.75, 1.0}) {
  if (samples < 2) throw std::invalid_argument("sani_stats: need >= 2 samples");
  SaniStats s;
  s.lambda = lambda;
  s.samples = samples;
  s.seed = seed;
  s.edge_levels = std::move(edge_levels);
  for (std::size_t k = 0; k < s.edge_levels.size(); ++k) {
    Rng rng = Rng::derive(seed, k);
    const Tensor eps = gaussian({1, 1, samples}, rng);
    const Tensor edge({1, samples}, s.edge_levels[k]);
    const Tensor mod = modulate_noise(eps, edge, lambda);
    const auto ms = mean_std(mod.data());
    s.empirical_mean.push_back(ms.mean);
    s.empirical_std.push_back(ms.stddev);
    s.theoretical_std.push_back(1.0 - lambda * s.edge_levels[k]);
  }
  return s;
}

}  // namespace dsr
