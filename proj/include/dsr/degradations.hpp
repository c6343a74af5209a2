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
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dsr/descriptor.hpp"
#include "dsr/ops.hpp"
#include "dsr/rng.hpp"
#include "dsr/tensor.hpp"

namespace dsr {

struct DegradationRecipe {
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  double block_strength = 0.0;
  double brightness_shift = 0.0;
  double contrast_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(blur_sigma >= 0.0)) {
      throw std::invalid_argument("recipe: blur_sigma must be >= 0");
    }
    if (!(noise_sigma >= 0.0)) {
      throw std::invalid_argument("recipe: noise_sigma must be >= 0");
    }
    if (!(block_strength >= 0.0 && block_strength <= 1.0)) {
      throw std::invalid_argument("recipe: block_strength must be in [0,1]");
    }
    if (!(brightness_shift >= -0.5 && brightness_shift <= 0.5)) {
      throw std::invalid_argument(
          "recipe: brightness_shift must be in [-0.5,0.5]");
    }
    if (!(contrast_scale > 0.0) || !std::isfinite(contrast_scale)) {
      throw std::invalid_argument("recipe: contrast_scale must be positive");
    }
  }
};

namespace detail {

// Applies `fn(plane) -> plane` to every channel of an image.
template <typename Fn>
Image map_channels(const Image& image, Fn&& fn) {
  const std::size_t h = image.height(), w = image.width(),
                    c = image.channels();
  Tensor out({h, w, c});
  Tensor plane({h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) plane(y, x) = image(y, x, ch);
    }
    const Tensor res = fn(plane);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out(y, x, ch) = std::clamp(res(y, x), 0.0, 1.0);
      }
    }
  }
  return Image(std::move(out));
}

}  // namespace detail

// Normalised 1-D Gaussian taps of radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel_1d(double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_kernel_1d: sigma must be > 0");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with replicate padding, clamped to [0,1].
inline Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  }
  if (sigma == 0.0) return image;
  const auto taps = gaussian_kernel_1d(sigma);
  const Tensor row_kernel({1, taps.size()}, taps);
  const Tensor col_kernel({taps.size(), 1}, taps);
  return detail::map_channels(image, [&](const Tensor& plane) {
    return conv2d(conv2d(plane, row_kernel), col_kernel);
  });
}

// Adds i.i.d. N(0, sigma^2) to every sample (row-major, channel fastest),
// then clamps to [0,1].
inline Image add_awgn(const Image& image, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("add_awgn: sigma must be >= 0");
  }
  if (sigma == 0.0) return image;
  Tensor out = image.pixels();
  for (double& v : out.values()) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  return Image(std::move(out));
}

// Replaces each origin-aligned 8x8 tile (partial tiles at the right/bottom
// edges included) with its mean, per channel.
inline Image block_means(const Image& image) {
  return detail::map_channels(image, [](const Tensor& plane) {
    const std::size_t h = plane.extent(0), w = plane.extent(1);
    Tensor out({h, w});
    for (std::size_t ty = 0; ty < h; ty += 8) {
      for (std::size_t tx = 0; tx < w; tx += 8) {
        const std::size_t ey = std::min(ty + 8, h), ex = std::min(tx + 8, w);
        double sum = 0.0;
        for (std::size_t y = ty; y < ey; ++y) {
          for (std::size_t x = tx; x < ex; ++x) sum += plane(y, x);
        }
        const double mean = sum / static_cast<double>((ey - ty) * (ex - tx));
        for (std::size_t y = ty; y < ey; ++y) {
          for (std::size_t x = tx; x < ex; ++x) out(y, x) = mean;
        }
      }
    }
    return out;
  });
}

// Convex blend toward the 8x8 tile means.
inline Image blockify(const Image& image, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw std::invalid_argument("blockify: strength must be in [0,1]");
  }
  if (strength == 0.0) return image;
  const Image means = block_means(image);
  Tensor out = image.pixels();
  const auto& m = means.pixels().values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp((1.0 - strength) * out[i] + strength * m[i], 0.0, 1.0);
  }
  return Image(std::move(out));
}

// clamp(scale * (x - 0.5) + 0.5 + shift, 0, 1)
inline Image adjust_luminance(const Image& image, double brightness_shift,
                              double contrast_scale) {
  if (!(contrast_scale > 0.0)) {
    throw std::invalid_argument("adjust_luminance: contrast_scale must be > 0");
  }
  if (brightness_shift == 0.0 && contrast_scale == 1.0) return image;
  Tensor out = image.pixels();
  for (double& v : out.values()) {
    v = std::clamp(contrast_scale * (v - 0.5) + 0.5 + brightness_shift, 0.0,
                   1.0);
  }
  return Image(std::move(out));
}

// Blur, then blocking, then luminance, then noise.
inline Image apply_recipe(const Image& image, const DegradationRecipe& recipe) {
  recipe.validate();
  Rng rng(recipe.seed);
  Image out = gaussian_blur(image, recipe.blur_sigma);
  out = blockify(out, recipe.block_strength);
  out = adjust_luminance(out, recipe.brightness_shift, recipe.contrast_scale);
  return add_awgn(out, recipe.noise_sigma, rng);
}

enum class SweepAxis { kBlur, kNoise, kBlock, kBrightness, kContrast };

inline std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kBlur: return "blur";
    case SweepAxis::kNoise: return "noise";
    case SweepAxis::kBlock: return "block";
    case SweepAxis::kBrightness: return "brightness";
    case SweepAxis::kContrast: return "contrast";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::kBlur, SweepAxis::kNoise, SweepAxis::kBlock,
                    SweepAxis::kBrightness, SweepAxis::kContrast}) {
    if (name == to_string(axis)) return axis;
  }
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) +
                              "' (expected blur|noise|block|brightness|contrast)");
}

// Recipe that varies a single axis; all other parameters stay neutral.
inline DegradationRecipe single_axis_recipe(SweepAxis axis, double level,
                                            std::uint64_t seed) {
  DegradationRecipe r;
  r.seed = seed;
  switch (axis) {
    case SweepAxis::kBlur: r.blur_sigma = level; break;
    case SweepAxis::kNoise: r.noise_sigma = level; break;
    case SweepAxis::kBlock: r.block_strength = level; break;
    case SweepAxis::kBrightness: r.brightness_shift = level; break;
    case SweepAxis::kContrast: r.contrast_scale = level; break;
  }
  return r;
}

struct SweepRow {
  std::size_t image_id;
  std::size_t level_index;
  double level;
  DegradationDescriptor descriptor;
};

// Rows are emitted in (image, level) order. The noise stream of each row is
// Rng::derive(Rng::derive(base_seed, image_id).seed(), level_index).
inline std::vector<SweepRow> sweep(const std::vector<Image>& corpus,
                                   SweepAxis axis,
                                   const std::vector<double>& levels,
                                   std::uint64_t base_seed,
                                   const DescriptorConfig& config = {}) {
  if (corpus.empty()) throw std::invalid_argument("sweep: empty corpus");
  if (levels.empty()) throw std::invalid_argument("sweep: empty level list");
  std::vector<SweepRow> rows;
  rows.reserve(corpus.size() * levels.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::uint64_t image_seed = Rng::derive(base_seed, i).seed();
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto recipe = single_axis_recipe(
          axis, levels[l], Rng::derive(image_seed, l).seed());
      rows.push_back(
          {i, l, levels[l], descriptor(apply_recipe(corpus[i], recipe), config)});
    }
  }
  return rows;
}

// Procedural RGB test image: a blend of an oriented sinusoidal grating, a
// soft-edged step and a box-filtered noise texture, mapped into [0.1, 0.9]
// so that moderate noise rarely clips.
inline Image procedural_image(std::size_t index, std::size_t size = 64,
                              std::uint64_t corpus_seed = 2024) {
  Rng rng = Rng::derive(corpus_seed, index);
  const double freq = rng.uniform(0.04, 0.22);  // cycles per pixel
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double step_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double step_offset = rng.uniform(-0.25, 0.25) * static_cast<double>(size);
  const double w_grating = rng.uniform(0.2, 1.0);
  const double w_step = rng.uniform(0.2, 1.0);
  const double w_texture = rng.uniform(0.2, 1.0);
  std::array<double, 3> tint{};
  for (double& t : tint) t = rng.uniform(0.85, 1.0);

  // Texture: white noise smoothed by two passes of a 3x3 box filter.
  Tensor noise({size, size});
  for (double& v : noise.values()) v = rng.uniform(-1.0, 1.0);
  const Tensor texture = avg_pool3x3(avg_pool3x3(noise));

  const double c = 0.5 * static_cast<double>(size - 1);
  const double total = w_grating + w_step + w_texture;
  Tensor base({size, size});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) - c;
      const double dy = static_cast<double>(y) - c;
      const double u = dx * std::cos(angle) + dy * std::sin(angle);
      const double grating =
          std::sin(2.0 * std::numbers::pi * freq * u + phase);
      const double s = dx * std::cos(step_angle) + dy * std::sin(step_angle) -
                       step_offset;
      const double step = std::tanh(s);
      base(y, x) = (w_grating * grating + w_step * step +
                    2.0 * w_texture * texture(y, x)) / total;
    }
  }
  const double lo = base.min(), hi = base.max();
  Tensor px({size, size, 3});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double v = hi > lo ? (base(y, x) - lo) / (hi - lo) : 0.5;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        px(y, x, ch) = 0.1 + 0.8 * v * tint[ch];
      }
    }
  }
  return Image(std::move(px));
}

inline constexpr std::size_t kCorpusSize = 20;

inline std::vector<Image> procedural_corpus(std::size_t count = kCorpusSize,
                                            std::size_t size = 64,
                                            std::uint64_t corpus_seed = 2024) {
  std::vector<Image> corpus;
  corpus.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    corpus.push_back(procedural_image(i, size, corpus_seed));
  }
  return corpus;
}

}  // namespace dsr
