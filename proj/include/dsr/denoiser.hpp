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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/adapter.hpp"
#include "dsr/rng.hpp"
#include "dsr/tensor.hpp"

namespace dsr {

struct DenoiserShape {
  std::size_t channels = 3;     // latent channels C
  std::size_t hidden = 8;       // hidden feature maps
  std::size_t token_dim = 512;  // width of the conditioning token
  std::size_t timesteps = 1000; // T, used to scale the timestep feature t/T

  friend bool operator==(const DenoiserShape&, const DenoiserShape&) = default;
};

// Two 3x3 convolutions (zero padding) with SiLU in between. Before the
// activation every hidden channel receives
//   time_w[k] * t/T  +  (cond_w token / sqrt(D) + cond_b)[k]
// where the conditioning term is dropped when no token is given.
struct ToyDenoiser {
  DenoiserShape shape;
  Tensor conv1_w, conv1_b;  // [hidden, C, 3, 3], [hidden]
  Tensor time_w;            // [hidden]
  Tensor cond_w, cond_b;    // [hidden, D], [hidden]
  Tensor conv2_w, conv2_b;  // [C, hidden, 3, 3], [C]

  static ToyDenoiser zeros(const DenoiserShape& s = {}) {
    ToyDenoiser n;
    n.shape = s;
    n.conv1_w = Tensor({s.hidden, s.channels, 3, 3});
    n.conv1_b = Tensor({s.hidden});
    n.time_w = Tensor({s.hidden});
    n.cond_w = Tensor({s.hidden, s.token_dim});
    n.cond_b = Tensor({s.hidden});
    n.conv2_w = Tensor({s.channels, s.hidden, 3, 3});
    n.conv2_b = Tensor({s.channels});
    return n;
  }

  static ToyDenoiser init(const DenoiserShape& s, Rng& rng) {
    ToyDenoiser n = zeros(s);
    auto fill = [&rng](Tensor& t, std::size_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& v : t.values()) v = rng.uniform(-bound, bound);
    };
    fill(n.conv1_w, 9 * s.channels);
    fill(n.conv1_b, 9 * s.channels);
    fill(n.time_w, 1);
    fill(n.cond_w, 1);
    fill(n.cond_b, 1);
    fill(n.conv2_w, 9 * s.hidden);
    fill(n.conv2_b, 9 * s.hidden);
    return n;
  }

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("conv1_w", self.conv1_w);
    fn("conv1_b", self.conv1_b);
    fn("time_w", self.time_w);
    fn("cond_w", self.cond_w);
    fn("cond_b", self.cond_b);
    fn("conv2_w", self.conv2_w);
    fn("conv2_b", self.conv2_b);
  }
  template <typename Fn>
  void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn>
  void for_each(Fn&& fn) const { visit(*this, fn); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&n](const char*, const Tensor& t) { n += t.size(); });
    return n;
  }

  friend bool operator==(const ToyDenoiser&, const ToyDenoiser&) = default;
};

namespace detail {

// out[o,y,x] = b[o] + sum_{c,i,j} w[o,c,i,j] in[c, y+i-1, x+j-1], zero padded.
inline Tensor conv3x3(const Tensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t cin = in.extent(0), h = in.extent(1), wd = in.extent(2);
  const std::size_t cout = w.extent(0);
  Tensor out({cout, h, wd});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        double acc = b[o];
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t i = 0; i < 3; ++i) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + i) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t j = 0; j < 3; ++j) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + j) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
              acc += w[((o * cin + c) * 3 + i) * 3 + j] *
                     in[(c * h + static_cast<std::size_t>(sy)) * wd +
                        static_cast<std::size_t>(sx)];
            }
          }
        }
        out[(o * h + y) * wd + x] = acc;
      }
    }
  }
  return out;
}

// Accumulates dw, db and returns the gradient with respect to `in`.
inline Tensor conv3x3_backward(const Tensor& in, const Tensor& w,
                               const Tensor& gout, Tensor& dw, Tensor& db) {
  const std::size_t cin = in.extent(0), h = in.extent(1), wd = in.extent(2);
  const std::size_t cout = w.extent(0);
  Tensor gin(in.shape());
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        const double g = gout[(o * h + y) * wd + x];
        db[o] += g;
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t i = 0; i < 3; ++i) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + i) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t j = 0; j < 3; ++j) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + j) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
              const std::size_t wi = ((o * cin + c) * 3 + i) * 3 + j;
              const std::size_t ii = (c * h + static_cast<std::size_t>(sy)) * wd +
                                     static_cast<std::size_t>(sx);
              dw[wi] += g * in[ii];
              gin[ii] += g * w[wi];
            }
          }
        }
      }
    }
  }
  return gin;
}

}  // namespace detail

struct DenoiserCache {
  Tensor input;
  Tensor pre1, act1;
  double time_feature = 0.0;
  std::optional<Vector> token;
};

// Noise prediction for a [C, h, w] latent.
inline Tensor toy_forward(const ToyDenoiser& net, const Tensor& z_t,
                          std::size_t t,
                          std::optional<std::span<const double>> token,
                          DenoiserCache* cache = nullptr) {
  const auto& s = net.shape;
  if (z_t.rank() != 3 || z_t.extent(0) != s.channels) {
    throw std::invalid_argument("toy_forward: latent must be [" +
                                std::to_string(s.channels) + ",h,w], got " +
                                shape_string(z_t.shape()));
  }
  if (token && token->size() != s.token_dim) {
    throw std::invalid_argument("toy_forward: token width " +
                                std::to_string(token->size()) +
                                " does not match " +
                                std::to_string(s.token_dim));
  }
  const double tau = static_cast<double>(t) / static_cast<double>(s.timesteps);
  const double token_scale = 1.0 / std::sqrt(static_cast<double>(s.token_dim));
  Tensor pre1 = detail::conv3x3(z_t, net.conv1_w, net.conv1_b);
  Vector bias(s.hidden);
  for (std::size_t k = 0; k < s.hidden; ++k) {
    bias[k] = net.time_w[k] * tau;
    if (token) {
      double acc = 0.0;
      for (std::size_t i = 0; i < s.token_dim; ++i) {
        acc += net.cond_w[k * s.token_dim + i] * (*token)[i];
      }
      bias[k] += acc * token_scale + net.cond_b[k];
    }
  }
  const std::size_t plane = z_t.extent(1) * z_t.extent(2);
  Tensor act1(pre1.shape());
  for (std::size_t k = 0; k < s.hidden; ++k) {
    for (std::size_t i = 0; i < plane; ++i) {
      double& p = pre1[k * plane + i];
      p += bias[k];
      act1[k * plane + i] = nn::silu(p);
    }
  }
  Tensor out = detail::conv3x3(act1, net.conv2_w, net.conv2_b);
  if (cache) {
    cache->input = z_t;
    cache->pre1 = std::move(pre1);
    cache->act1 = std::move(act1);
    cache->time_feature = tau;
    cache->token = token ? std::optional<Vector>(Vector(token->begin(), token->end()))
                         : std::nullopt;
  }
  return out;
}

// Accumulates parameter gradients into `grads` and returns the gradient with
// respect to the token (empty when the forward pass had none).
inline Vector toy_backward(const ToyDenoiser& net, const DenoiserCache& cache,
                           const Tensor& grad_out, ToyDenoiser& grads) {
  const auto& s = net.shape;
  Tensor gact = detail::conv3x3_backward(cache.act1, net.conv2_w, grad_out,
                                         grads.conv2_w, grads.conv2_b);
  const std::size_t plane = cache.input.extent(1) * cache.input.extent(2);
  Vector gbias(s.hidden, 0.0);
  for (std::size_t k = 0; k < s.hidden; ++k) {
    for (std::size_t i = 0; i < plane; ++i) {
      double& g = gact[k * plane + i];
      g *= nn::silu_grad(cache.pre1[k * plane + i]);
      gbias[k] += g;
    }
  }
  detail::conv3x3_backward(cache.input, net.conv1_w, gact, grads.conv1_w,
                           grads.conv1_b);
  const double token_scale = 1.0 / std::sqrt(static_cast<double>(s.token_dim));
  Vector gtoken;
  if (cache.token) gtoken.assign(s.token_dim, 0.0);
  for (std::size_t k = 0; k < s.hidden; ++k) {
    grads.time_w[k] += gbias[k] * cache.time_feature;
    if (!cache.token) continue;
    grads.cond_b[k] += gbias[k];
    for (std::size_t i = 0; i < s.token_dim; ++i) {
      grads.cond_w[k * s.token_dim + i] +=
          gbias[k] * (*cache.token)[i] * token_scale;
      gtoken[i] += gbias[k] * net.cond_w[k * s.token_dim + i] * token_scale;
    }
  }
  return gtoken;
}

// Mean squared error over all elements.
inline double training_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("training_loss: shape mismatch " +
                                shape_string(pred.shape()) + " vs " +
                                shape_string(target.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

// d loss / d pred for training_loss, scaled by `weight`.
inline Tensor training_loss_grad(const Tensor& pred, const Tensor& target,
                                 double weight = 1.0) {
  Tensor g(pred.shape());
  const double k = 2.0 * weight / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = k * (pred[i] - target[i]);
  return g;
}

}  // namespace dsr
