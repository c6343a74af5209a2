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

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "dsr/ops.hpp"
#include "dsr/tensor.hpp"

namespace dsr {

// Luma weights applied to RGB before every statistic.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

struct DescriptorConfig {
  double blur_epsilon = 1e-6;    // stabiliser in 1 / (Var(lap) + eps)
  double edge_threshold = 0.08;  // Sobel magnitude on [0,1] intensities
};

// Component order is fixed: blur, noise, jpeg, edge, bright, contrast.
enum DescriptorIndex : std::size_t {
  kBlur = 0,
  kNoise,
  kJpeg,
  kEdge,
  kBright,
  kContrast,
  kDescriptorSize
};

inline constexpr std::array<const char*, kDescriptorSize> kDescriptorNames = {
    "d_blur", "d_noise", "d_jpeg", "d_edge", "d_bright", "d_contrast"};

using DescriptorVector = std::array<double, kDescriptorSize>;

struct DegradationDescriptor {
  DescriptorVector raw{};
  DescriptorVector transformed{};  // log(1 + raw), natural log

  static DegradationDescriptor from_raw(const DescriptorVector& raw) {
    DegradationDescriptor d;
    d.raw = raw;
    for (std::size_t i = 0; i < kDescriptorSize; ++i) {
      d.transformed[i] = std::log1p(raw[i]);
    }
    return d;
  }
};

inline Image grayscale(const Image& image) {
  if (image.channels() == 1) return image;
  if (image.channels() != 3) {
    throw std::invalid_argument("grayscale: unsupported channel count " +
                                std::to_string(image.channels()));
  }
  const std::size_t h = image.height(), w = image.width();
  Tensor out({h, w, 1});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Weights sum to one, so this equals R*wr + G*wg + B*wb and is exact
      // on achromatic pixels.
      const double r = image(y, x, 0), g = image(y, x, 1), b = image(y, x, 2);
      const double v = g + kLumaR * (r - g) + kLumaB * (b - g);
      out(y, x, 0) = std::clamp(v, 0.0, 1.0);
    }
  }
  return Image(std::move(out));
}

namespace detail {

inline const Image& require_gray(const Image& gray, const char* op) {
  if (gray.channels() != 1) {
    throw std::invalid_argument(std::string(op) +
                                ": expected a single-channel image");
  }
  return gray;
}

inline void require_min_size(const Image& gray, std::size_t n, const char* op) {
  if (gray.height() < n || gray.width() < n) {
    throw std::invalid_argument(std::string(op) + ": image must be at least " +
                                std::to_string(n) + "x" + std::to_string(n));
  }
}

}  // namespace detail

// Reciprocal of the population variance of the Laplacian response.
inline double d_blur(const Image& gray, double epsilon = 1e-6) {
  detail::require_gray(gray, "d_blur");
  detail::require_min_size(gray, 3, "d_blur");
  const Tensor lap = conv2d(gray, kernels::laplacian(), Padding::kReplicate);
  const double sd = mean_std(lap.data()).stddev;
  return 1.0 / (sd * sd + epsilon);
}

// Mean absolute residual against the 3x3 box-filtered image.
inline double d_noise(const Image& gray) {
  detail::require_gray(gray, "d_noise");
  const Tensor pooled = avg_pool3x3(gray);
  const auto& px = gray.pixels().values();
  double acc = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    acc += std::abs(px[i] - pooled[i]);
  }
  return acc / static_cast<double>(px.size());
}

// Blockiness on the origin-aligned 8x8 grid. Adjacent pixel pairs (both
// directions, pooled) are split into those straddling a grid line (between
// index 8k-1 and 8k) and the rest; the result is the boundary mean absolute
// difference minus the interior one, floored at zero.
inline double d_jpeg(const Image& gray) {
  detail::require_gray(gray, "d_jpeg");
  detail::require_min_size(gray, 9, "d_jpeg");
  const std::size_t h = gray.height(), w = gray.width();
  double boundary_sum = 0.0, interior_sum = 0.0;
  std::size_t boundary_n = 0, interior_n = 0;
  auto visit = [&](double a, double b, std::size_t second_index) {
    const double diff = std::abs(a - b);
    if (second_index % 8 == 0) {
      boundary_sum += diff;
      ++boundary_n;
    } else {
      interior_sum += diff;
      ++interior_n;
    }
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 1; x < w; ++x) visit(gray(y, x - 1), gray(y, x), x);
  }
  for (std::size_t y = 1; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) visit(gray(y - 1, x), gray(y, x), y);
  }
  const double boundary = boundary_sum / static_cast<double>(boundary_n);
  const double interior = interior_sum / static_cast<double>(interior_n);
  return std::max(0.0, boundary - interior);
}

// Sobel gradient magnitude sqrt(gx^2 + gy^2), replicate padding, [H, W].
inline Tensor sobel_magnitude(const Image& gray) {
  const Tensor gx = conv2d(gray, kernels::sobel_x(), Padding::kReplicate);
  const Tensor gy = conv2d(gray, kernels::sobel_y(), Padding::kReplicate);
  Tensor mag(gx.shape());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  }
  return mag;
}

// Fraction of pixels whose Sobel magnitude is strictly above `threshold`.
inline double d_edge(const Image& gray, double threshold = 0.08) {
  detail::require_gray(gray, "d_edge");
  detail::require_min_size(gray, 3, "d_edge");
  const Tensor mag = sobel_magnitude(gray);
  std::size_t count = 0;
  for (double g : mag.values()) count += g > threshold ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(mag.size());
}

struct BrightContrast {
  double brightness;
  double contrast;
};

inline BrightContrast d_bright_contrast(const Image& gray) {
  detail::require_gray(gray, "d_bright_contrast");
  const auto [mean, sd] = mean_std(gray.pixels().data());
  return {mean, sd};
}

inline DegradationDescriptor descriptor(const Image& image,
                                        const DescriptorConfig& config = {}) {
  const Image gray = grayscale(image);
  DescriptorVector raw{};
  raw[kBlur] = d_blur(gray, config.blur_epsilon);
  raw[kNoise] = d_noise(gray);
  raw[kJpeg] = d_jpeg(gray);
  raw[kEdge] = d_edge(gray, config.edge_threshold);
  const auto bc = d_bright_contrast(gray);
  raw[kBright] = bc.brightness;
  raw[kContrast] = bc.contrast;
  return DegradationDescriptor::from_raw(raw);
}

}  // namespace dsr
