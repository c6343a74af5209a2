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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/adapter.hpp"
#include "dsr/degradations.hpp"
#include "dsr/denoiser.hpp"
#include "dsr/descriptor.hpp"
#include "dsr/rng.hpp"
#include "dsr/sani.hpp"
#include "dsr/schedule.hpp"

namespace dsr {

// One training example: clean latent [C, h, w] and the degraded LR image.
struct ToyPair {
  Tensor z0;
  Image lr;
};

// Block average of each channel onto an h x w grid (extents must divide).
inline Tensor area_downsample(const Image& image, std::size_t h, std::size_t w) {
  if (image.height() % h != 0 || image.width() % w != 0) {
    throw std::invalid_argument("area_downsample: extents must divide evenly");
  }
  const std::size_t fy = image.height() / h, fx = image.width() / w;
  const std::size_t c = image.channels();
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double sum = 0.0;
        for (std::size_t dy = 0; dy < fy; ++dy) {
          for (std::size_t dx = 0; dx < fx; ++dx) {
            sum += image(y * fy + dy, x * fx + dx, ch);
          }
        }
        out[(ch * h + y) * w + x] = sum / static_cast<double>(fy * fx);
      }
    }
  }
  return out;
}

// Toy corpus from the procedural images: z0 = 2 * area_downsample(x) - 1 and
// lr = x under a random blur/noise/blocking recipe.
inline std::vector<ToyPair> make_toy_corpus(std::size_t count = kCorpusSize,
                                            std::size_t latent = 8,
                                            std::uint64_t seed = 7) {
  std::vector<ToyPair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Image hr = procedural_image(i);
    Rng rng = Rng::derive(seed, 1000 + i);
    DegradationRecipe recipe;
    recipe.blur_sigma = rng.uniform(0.0, 2.0);
    recipe.noise_sigma = rng.uniform(0.0, 0.1);
    recipe.block_strength = rng.uniform(0.0, 0.5);
    recipe.seed = rng.next_u64();
    Tensor z0 = area_downsample(hr, latent, latent);
    for (double& v : z0.values()) v = 2.0 * v - 1.0;
    pairs.push_back({std::move(z0), apply_recipe(hr, recipe)});
  }
  return pairs;
}

struct TrainConfig {
  std::size_t steps = 500;
  double learning_rate = 1e-3;
  double lambda = kDefaultLambda;
  std::uint64_t seed = 7;
  bool use_token = true;
  bool dynamic_token = true;
  bool dropout = true;
  std::size_t batch_size = 4;
  std::size_t hidden = 8;
  AdapterShape adapter{};
  std::size_t timesteps = kDefaultSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  DescriptorConfig descriptor{};
};

struct TrainReport {
  TrainConfig config;
  std::vector<double> losses;  // mean loss of each step's batch
  double first50_mean = 0.0;
  double last50_mean = 0.0;
  double ratio = 0.0;  // last50 / first50
  ToyDenoiser initial_denoiser, denoiser;
  AdapterWeights initial_adapter, adapter;
};

inline double window_mean(const std::vector<double>& v, std::size_t begin,
                          std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += v[i];
  return acc / static_cast<double>(end - begin);
}

inline void summarize(TrainReport& report) {
  const auto& l = report.losses;
  const std::size_t window = std::min<std::size_t>(50, l.size());
  if (window == 0) return;
  report.first50_mean = window_mean(l, 0, window);
  report.last50_mean = window_mean(l, l.size() - window, l.size());
  report.ratio = report.last50_mean / report.first50_mean;
}

template <typename Params>
void sgd_step(Params& params, const Params& grads, double lr) {
  std::vector<Tensor*> dst;
  params.for_each([&dst](const char*, Tensor& t) { dst.push_back(&t); });
  std::size_t k = 0;
  grads.for_each([&](const char*, const Tensor& g) {
    Tensor& p = *dst[k++];
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  });
}

// Random streams used by training, all derived from config.seed:
//   0: sample index, timestep and noise draws (in that order per sample)
//   1: adapter dropout masks
//   2: denoiser initialisation
//   3: adapter initialisation
namespace streams {
inline constexpr std::uint64_t kData = 0;
inline constexpr std::uint64_t kDropout = 1;
inline constexpr std::uint64_t kDenoiserInit = 2;
inline constexpr std::uint64_t kAdapterInit = 3;
}  // namespace streams

inline ToyDenoiser initial_denoiser(const TrainConfig& config,
                                    std::size_t channels) {
  Rng rng = Rng::derive(config.seed, streams::kDenoiserInit);
  return ToyDenoiser::init({channels, config.hidden, config.adapter.dim,
                            config.timesteps},
                           rng);
}

inline AdapterWeights initial_adapter(const TrainConfig& config) {
  Rng rng = Rng::derive(config.seed, streams::kAdapterInit);
  return AdapterWeights::init(config.adapter, rng);
}

// Plain SGD on the noise-prediction MSE with edge-modulated noise and the
// degradation token feeding the denoiser's conditioning head. Each step
// draws `batch_size` samples, averages their gradients and updates both the
// denoiser and (when a token is used) the adapter.
inline TrainReport train_toy(const std::vector<ToyPair>& corpus,
                             const TrainConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("train_toy: empty corpus");
  if (config.steps == 0) throw std::invalid_argument("train_toy: steps must be > 0");
  if (!(config.learning_rate >= 0.0)) {
    throw std::invalid_argument("train_toy: learning rate must be >= 0");
  }
  if (config.batch_size == 0) {
    throw std::invalid_argument("train_toy: batch_size must be > 0");
  }
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    throw std::invalid_argument("train_toy: lambda must be in [0,1]");
  }
  const Shape latent_shape = corpus.front().z0.shape();
  for (const auto& p : corpus) {
    if (p.z0.shape() != latent_shape || p.z0.rank() != 3) {
      throw std::invalid_argument("train_toy: latents must share one [C,h,w] shape");
    }
  }
  const std::size_t channels = latent_shape[0];
  const std::size_t h = latent_shape[1], w = latent_shape[2];
  const DiffusionSchedule schedule(config.timesteps, config.beta_start,
                                   config.beta_end);

  // Descriptors and edge maps depend only on the LR images.
  std::vector<Vector> descriptors;
  std::vector<Tensor> edges;
  for (const auto& p : corpus) {
    const auto d = descriptor(p.lr, config.descriptor).transformed;
    descriptors.emplace_back(d.begin(), d.end());
    edges.push_back(edge_map(p.lr, h, w).latent);
  }

  TrainReport report;
  report.config = config;
  report.initial_denoiser = initial_denoiser(config, channels);
  report.initial_adapter = initial_adapter(config);
  ToyDenoiser net = report.initial_denoiser;
  AdapterWeights adapter = report.initial_adapter;

  Rng data_rng = Rng::derive(config.seed, streams::kData);
  Rng dropout_rng = Rng::derive(config.seed, streams::kDropout);
  const double batch_weight = 1.0 / static_cast<double>(config.batch_size);
  report.losses.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    ToyDenoiser net_grads = ToyDenoiser::zeros(net.shape);
    AdapterGradients adapter_grads{AdapterWeights::zeros_like(adapter), {}};
    double loss = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto idx = static_cast<std::size_t>(
          data_rng.uniform_int(0, corpus.size() - 1));
      const auto t = static_cast<std::size_t>(
          data_rng.uniform_int(1, config.timesteps));
      const Tensor eps = gaussian(latent_shape, data_rng);
      const Tensor eps_prime = modulate_noise(eps, edges[idx], config.lambda);
      const Tensor z_t = noisy_latent(corpus[idx].z0, eps_prime, t, schedule);

      AdapterCache adapter_cache;
      std::optional<Vector> token;
      if (config.use_token) {
        token = config.dynamic_token
                    ? adapter_dynamic(descriptors[idx], t, adapter,
                                      config.dropout, &dropout_rng,
                                      &adapter_cache)
                    : adapter_static(descriptors[idx], adapter, config.dropout,
                                     &dropout_rng, &adapter_cache);
      }
      DenoiserCache cache;
      const Tensor pred =
          toy_forward(net, z_t, t,
                      token ? std::optional<std::span<const double>>(*token)
                            : std::nullopt,
                      &cache);
      loss += training_loss(pred, eps_prime) * batch_weight;
      const Tensor g = training_loss_grad(pred, eps_prime, batch_weight * static_cast<double>(pred.size()));
      const Vector gtoken = toy_backward(net, cache, g, net_grads);
      if (token) adapter_backward(adapter_cache, adapter, gtoken, adapter_grads);
    }
    report.losses.push_back(loss);
    sgd_step(net, net_grads, config.learning_rate);
    if (config.use_token) {
      sgd_step(adapter, adapter_grads.weights, config.learning_rate);
    }
  }
  report.denoiser = std::move(net);
  report.adapter = std::move(adapter);
  summarize(report);
  return report;
}

struct ScalarGainFit {
  double gain = 0.0;     // Polyak average of the second half of the iterates
  double optimum = 0.0;  // sqrt(1-ab) / (ab z0^2 + 1 - ab)
};

// Single-pixel predictor g * z_t regressed onto unmodulated noise at a fixed
// timestep with plain SGD.
inline ScalarGainFit fit_scalar_gain(double z0, std::size_t t,
                                     const DiffusionSchedule& schedule,
                                     std::size_t steps, double learning_rate,
                                     std::uint64_t seed) {
  if (steps < 2) throw std::invalid_argument("fit_scalar_gain: steps must be >= 2");
  const double ab = schedule.alpha_bar(t);
  Rng rng(seed);
  double g = 0.0, avg = 0.0;
  std::size_t n_avg = 0;
  const Tensor z0_t({1, 1, 1}, z0);
  for (std::size_t k = 0; k < steps; ++k) {
    const Tensor eps = gaussian({1, 1, 1}, rng);
    const double zt = noisy_latent(z0_t, eps, t, schedule)[0];
    const double grad = 2.0 * (g * zt - eps[0]) * zt;
    g -= learning_rate * grad;
    if (k >= steps / 2) {
      avg += g;
      ++n_avg;
    }
  }
  return {avg / static_cast<double>(n_avg),
          std::sqrt(1.0 - ab) / (ab * z0 * z0 + (1.0 - ab))};
}

}  // namespace dsr
