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
#include <stdexcept>
#include <string>

#include "dsr/rng.hpp"
#include "dsr/tensor.hpp"

namespace dsr {

enum class Padding { kReplicate, kZero };

namespace kernels {

inline Tensor sobel_x() {
  return Tensor({3, 3}, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
}

inline Tensor sobel_y() {
  return Tensor({3, 3}, {-1, -2, -1, 0, 0, 0, 1, 2, 1});
}

// 4-neighbour discrete Laplacian.
inline Tensor laplacian() {
  return Tensor({3, 3}, {0, 1, 0, 1, -4, 1, 0, 1, 0});
}

}  // namespace kernels

namespace detail {

inline std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  return i > last ? last : i;
}

}  // namespace detail

// 2-D correlation (no kernel flip) of a single-channel plane:
//   out[y,x] = sum_ij k[i,j] * in[y + i - ry, x + j - rx]
// Out-of-range samples come from the chosen padding. Output is [H, W].
// Accumulated relative to the centre pixel, so zero-sum kernels give exact
// zeros on flat regions.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel,
                     Padding padding = Padding::kReplicate) {
  const auto [h, w] = plane_dims(input);
  if (kernel.rank() != 2) {
    throw std::invalid_argument("conv2d: kernel must be 2-D");
  }
  const std::size_t kh = kernel.extent(0);
  const std::size_t kw = kernel.extent(1);
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw std::invalid_argument("conv2d: kernel extents must be odd, got " +
                                shape_string(kernel.shape()));
  }
  const auto ry = static_cast<std::ptrdiff_t>(kh / 2);
  const auto rx = static_cast<std::ptrdiff_t>(kw / 2);
  const auto& in = input.values();
  double kernel_sum = 0.0;
  for (double k : kernel.values()) kernel_sum += k;

  Tensor out({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double centre = in[y * w + x];
      double acc = 0.0;
      for (std::size_t i = 0; i < kh; ++i) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + i) - ry;
        for (std::size_t j = 0; j < kw; ++j) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + j) - rx;
          double v;
          if (padding == Padding::kReplicate) {
            v = in[detail::clamp_index(sy, h) * w + detail::clamp_index(sx, w)];
          } else if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) ||
                     sx >= static_cast<std::ptrdiff_t>(w)) {
            v = 0.0;
          } else {
            v = in[sy * w + sx];
          }
          acc += kernel(i, j) * (v - centre);
        }
      }
      out(y, x) = acc + kernel_sum * centre;
    }
  }
  return out;
}

inline Tensor conv2d(const Image& input, const Tensor& kernel,
                     Padding padding = Padding::kReplicate) {
  return conv2d(plane_of(input), kernel, padding);
}

// Mean of the replicate-padded 3x3 neighbourhood of every pixel.
inline Tensor avg_pool3x3(const Tensor& input) {
  const auto [h, w] = plane_dims(input);
  const auto& in = input.values();
  Tensor out({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double centre = in[y * w + x];
      double acc = 0.0;
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        const auto sy = detail::clamp_index(static_cast<std::ptrdiff_t>(y) + dy, h);
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          const auto sx =
              detail::clamp_index(static_cast<std::ptrdiff_t>(x) + dx, w);
          acc += in[sy * w + sx] - centre;
        }
      }
      out(y, x) = centre + acc / 9.0;
    }
  }
  return out;
}

inline Tensor avg_pool3x3(const Image& input) {
  return avg_pool3x3(plane_of(input));
}

// Bilinear resampling with half-pixel centres: output pixel i samples source
// coordinate (i + 0.5) * in / out - 0.5, clamped to [0, in - 1]. Clamping
// keeps the result inside the input range.
inline Tensor bilinear_resize(const Tensor& input, std::size_t out_h,
                              std::size_t out_w) {
  const auto [h, w] = plane_dims(input);
  if (out_h == 0 || out_w == 0) {
    throw std::invalid_argument("bilinear_resize: zero target extent");
  }
  if (out_h == h && out_w == w) return Tensor({h, w}, input.values());

  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      const std::size_t i1 = std::min(i0 + 1, in - 1);
      t[i] = {i0, i1, s - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(h, out_h);
  const auto tx = taps(w, out_w);
  const auto& in = input.values();

  Tensor out({out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y) {
    const auto& a = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto& b = tx[x];
      const double top = in[a.i0 * w + b.i0] * (1.0 - b.frac) +
                         in[a.i0 * w + b.i1] * b.frac;
      const double bottom = in[a.i1 * w + b.i0] * (1.0 - b.frac) +
                            in[a.i1 * w + b.i1] * b.frac;
      double v = top * (1.0 - a.frac) + bottom * a.frac;
      // Guard against rounding pushing a convex combination past its ends.
      const double lo = std::min({in[a.i0 * w + b.i0], in[a.i0 * w + b.i1],
                                  in[a.i1 * w + b.i0], in[a.i1 * w + b.i1]});
      const double hi = std::max({in[a.i0 * w + b.i0], in[a.i0 * w + b.i1],
                                  in[a.i1 * w + b.i0], in[a.i1 * w + b.i1]});
      out(y, x) = std::clamp(v, lo, hi);
    }
  }
  return out;
}

// I.i.d. standard normal samples drawn in row-major order.
inline Tensor gaussian(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Population mean and standard deviation, accumulated relative to the first
// value (exact on constant input).
struct MeanStd {
  double mean;
  double stddev;
};

inline MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  const double n = static_cast<double>(values.size());
  const double shift = values[0];
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double mean = shift + sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace dsr
