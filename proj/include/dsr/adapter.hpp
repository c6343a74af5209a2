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
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/descriptor.hpp"
#include "dsr/rng.hpp"
#include "dsr/tensor.hpp"

namespace dsr {

using Vector = std::vector<double>;

inline constexpr double kLayerNormEpsilon = 1e-5;
inline constexpr double kAdapterDropout = 0.1;

namespace nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double silu(double x) { return x * sigmoid(x); }

inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// y = W x + b with W stored [rows, cols].
inline Vector affine(const Tensor& w, const Tensor& b, std::span<const double> x) {
  const std::size_t rows = w.extent(0), cols = w.extent(1);
  Vector y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = w.values().data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// Accumulates dW += g x^T, db += g and returns W^T g.
inline Vector affine_backward(const Tensor& w, std::span<const double> x,
                              std::span<const double> g, Tensor& dw,
                              Tensor& db) {
  const std::size_t rows = w.extent(0), cols = w.extent(1);
  Vector gx(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    db[r] += gr;
    const double* row = w.values().data() + r * cols;
    double* drow = dw.values().data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      drow[c] += gr * x[c];
      gx[c] += row[c] * gr;
    }
  }
  return gx;
}

struct LayerNormCache {
  Vector xhat;
  double inv_std = 0.0;
};

// gain * (x - mean) / sqrt(var + eps) + bias with population variance.
inline Vector layer_norm(std::span<const double> x, const Tensor& gain,
                         const Tensor& bias, LayerNormCache* cache = nullptr) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
  Vector xhat(x.size()), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xhat[i] = (x[i] - mean) * inv_std;
    y[i] = gain[i] * xhat[i] + bias[i];
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

inline Vector layer_norm_backward(const LayerNormCache& cache,
                                  std::span<const double> g, const Tensor& gain,
                                  Tensor& dgain, Tensor& dbias) {
  const std::size_t n = g.size();
  Vector gxhat(n);
  double mean_g = 0.0, mean_gx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dgain[i] += g[i] * cache.xhat[i];
    dbias[i] += g[i];
    gxhat[i] = g[i] * gain[i];
    mean_g += gxhat[i];
    mean_gx += gxhat[i] * cache.xhat[i];
  }
  mean_g /= static_cast<double>(n);
  mean_gx /= static_cast<double>(n);
  Vector gx(n);
  for (std::size_t i = 0; i < n; ++i) {
    gx[i] = cache.inv_std * (gxhat[i] - mean_g - cache.xhat[i] * mean_gx);
  }
  return gx;
}

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
  }
}

}  // namespace nn

// pe[2i] = sin(t / 10000^(2i/dim)), pe[2i+1] = cos(t / 10000^(2i/dim)).
inline Vector sinusoidal_pe(std::size_t t, std::size_t dim = 128) {
  if (dim == 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal_pe: dim must be even and positive");
  }
  Vector pe(dim);
  const double td = static_cast<double>(t);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double freq =
        std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    pe[2 * i] = std::sin(td / freq);
    pe[2 * i + 1] = std::cos(td / freq);
  }
  return pe;
}

struct AdapterShape {
  std::size_t dim = 512;          // cross-attention width D
  std::size_t hidden = 128;       // descriptor MLP hidden width
  std::size_t pe_dim = 128;       // timestep embedding width
  std::size_t time_hidden = 128;  // timestep MLP hidden width

  friend bool operator==(const AdapterShape&, const AdapterShape&) = default;
};

// Learnable parameters of the degradation-token adapter:
//   descriptor MLP  6 -> hidden -> D (SiLU, dropout after the hidden layer)
//   LayerNorm over D
//   timestep MLP    PE(t) -> time_hidden -> 2D producing [gamma_t, b_t]
// With the default shape this is 896 + 66048 + 1024 + 16512 + 132096 =
// 216576 parameters.
struct AdapterWeights {
  AdapterShape shape;
  Tensor w1, b1, w2, b2;
  Tensor ln_gain, ln_bias;
  Tensor t_w1, t_b1, t_w2, t_b2;

  // All-zero weights except ln_gain = 1.
  static AdapterWeights zeros(const AdapterShape& s = {}) {
    AdapterWeights a;
    a.shape = s;
    a.w1 = Tensor({s.hidden, kDescriptorSize});
    a.b1 = Tensor({s.hidden});
    a.w2 = Tensor({s.dim, s.hidden});
    a.b2 = Tensor({s.dim});
    a.ln_gain = Tensor({s.dim}, 1.0);
    a.ln_bias = Tensor({s.dim});
    a.t_w1 = Tensor({s.time_hidden, s.pe_dim});
    a.t_b1 = Tensor({s.time_hidden});
    a.t_w2 = Tensor({2 * s.dim, s.time_hidden});
    a.t_b2 = Tensor({2 * s.dim});
    return a;
  }

  // Same layout with every entry zero (gradient accumulator).
  static AdapterWeights zeros_like(const AdapterWeights& other) {
    AdapterWeights a = zeros(other.shape);
    a.ln_gain = Tensor({other.shape.dim});
    return a;
  }

  // Linear layers drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); LayerNorm
  // starts at gain 1, bias 0.
  static AdapterWeights init(const AdapterShape& s, Rng& rng) {
    AdapterWeights a = zeros(s);
    auto fill = [&rng](Tensor& w, Tensor& b, std::size_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& v : w.values()) v = rng.uniform(-bound, bound);
      for (double& v : b.values()) v = rng.uniform(-bound, bound);
    };
    fill(a.w1, a.b1, kDescriptorSize);
    fill(a.w2, a.b2, s.hidden);
    fill(a.t_w1, a.t_b1, s.pe_dim);
    fill(a.t_w2, a.t_b2, s.time_hidden);
    return a;
  }

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("w1", self.w1);
    fn("b1", self.b1);
    fn("w2", self.w2);
    fn("b2", self.b2);
    fn("ln_gain", self.ln_gain);
    fn("ln_bias", self.ln_bias);
    fn("t_w1", self.t_w1);
    fn("t_b1", self.t_b1);
    fn("t_w2", self.t_w2);
    fn("t_b2", self.t_b2);
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

  bool all_finite() const {
    bool ok = true;
    for_each([&ok](const char*, const Tensor& t) { ok = ok && t.all_finite(); });
    return ok;
  }

  friend bool operator==(const AdapterWeights&, const AdapterWeights&) = default;
};

// Intermediate values of one adapter forward pass.
struct AdapterCache {
  Vector d;
  Vector pre1, hidden;   // w1 d + b1, SiLU
  Vector dropout_scale;  // 0 or 1/(1-p) per hidden unit; 1 when inactive
  Vector m;              // w2 (hidden * scale) + b2
  bool dynamic = false;
  Vector pe, t_pre, t_hidden, gamma_shift;  // timestep MLP
  Vector v;                                 // pre-LayerNorm vector
  nn::LayerNormCache ln;
};

namespace detail {

inline void check_descriptor_input(std::span<const double> d) {
  if (d.size() != kDescriptorSize) {
    throw std::invalid_argument("adapter: descriptor must have 6 entries");
  }
  nn::require_finite(d, "adapter input");
}

// Shared forward pass; `t` engages the timestep scale-and-shift.
inline Vector adapter_forward(std::span<const double> d,
                              const std::optional<std::size_t>& t,
                              const AdapterWeights& w, bool dropout_active,
                              Rng* rng, AdapterCache* cache) {
  check_descriptor_input(d);
  AdapterCache local;
  AdapterCache& c = cache ? *cache : local;
  const std::size_t dim = w.shape.dim;

  c.d.assign(d.begin(), d.end());
  c.pre1 = nn::affine(w.w1, w.b1, d);
  c.hidden.resize(c.pre1.size());
  c.dropout_scale.assign(c.pre1.size(), 1.0);
  Vector dropped(c.pre1.size());
  for (std::size_t i = 0; i < c.pre1.size(); ++i) {
    c.hidden[i] = nn::silu(c.pre1[i]);
    if (dropout_active) {
      if (!rng) throw std::invalid_argument("adapter: dropout needs an Rng");
      c.dropout_scale[i] =
          rng->uniform() < kAdapterDropout ? 0.0 : 1.0 / (1.0 - kAdapterDropout);
    }
    dropped[i] = c.hidden[i] * c.dropout_scale[i];
  }
  c.m = nn::affine(w.w2, w.b2, dropped);

  c.dynamic = t.has_value();
  if (c.dynamic) {
    c.pe = sinusoidal_pe(*t, w.shape.pe_dim);
    c.t_pre = nn::affine(w.t_w1, w.t_b1, c.pe);
    c.t_hidden.resize(c.t_pre.size());
    for (std::size_t i = 0; i < c.t_pre.size(); ++i) {
      c.t_hidden[i] = nn::silu(c.t_pre[i]);
    }
    c.gamma_shift = nn::affine(w.t_w2, w.t_b2, c.t_hidden);
    c.v.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      c.v[i] = c.m[i] * (1.0 + c.gamma_shift[i]) + c.gamma_shift[dim + i];
    }
  } else {
    c.v = c.m;
  }
  return nn::layer_norm(c.v, w.ln_gain, w.ln_bias, &c.ln);
}

}  // namespace detail

// t_deg = LN(MLP(d)).
inline Vector adapter_static(std::span<const double> d, const AdapterWeights& w,
                             bool dropout_active = false, Rng* rng = nullptr,
                             AdapterCache* cache = nullptr) {
  return detail::adapter_forward(d, std::nullopt, w, dropout_active, rng, cache);
}

// t_deg' = LN(MLP(d) * (1 + gamma_t) + b_t), [gamma_t, b_t] = MLP_t(PE(t)).
inline Vector adapter_dynamic(std::span<const double> d, std::size_t t,
                              const AdapterWeights& w,
                              bool dropout_active = false, Rng* rng = nullptr,
                              AdapterCache* cache = nullptr) {
  return detail::adapter_forward(d, t, w, dropout_active, rng, cache);
}

struct AdapterGradients {
  AdapterWeights weights;  // same layout as the parameters
  Vector d;                // gradient with respect to the descriptor input
};

// Reverse pass for a recorded forward; accumulates into `grads.weights`.
inline void adapter_backward(const AdapterCache& c, const AdapterWeights& w,
                             std::span<const double> upstream,
                             AdapterGradients& grads) {
  const std::size_t dim = w.shape.dim;
  if (upstream.size() != dim) {
    throw std::invalid_argument("adapter_backward: upstream size mismatch");
  }
  nn::require_finite(upstream, "adapter_backward upstream");
  AdapterWeights& g = grads.weights;

  const Vector gv = nn::layer_norm_backward(c.ln, upstream, w.ln_gain,
                                            g.ln_gain, g.ln_bias);
  Vector gm(dim);
  if (c.dynamic) {
    Vector ggb(2 * dim);
    for (std::size_t i = 0; i < dim; ++i) {
      gm[i] = gv[i] * (1.0 + c.gamma_shift[i]);
      ggb[i] = gv[i] * c.m[i];
      ggb[dim + i] = gv[i];
    }
    Vector gth = nn::affine_backward(w.t_w2, c.t_hidden, ggb, g.t_w2, g.t_b2);
    for (std::size_t i = 0; i < gth.size(); ++i) {
      gth[i] *= nn::silu_grad(c.t_pre[i]);
    }
    nn::affine_backward(w.t_w1, c.pe, gth, g.t_w1, g.t_b1);
  } else {
    gm = gv;
  }

  Vector dropped(c.hidden.size());
  for (std::size_t i = 0; i < dropped.size(); ++i) {
    dropped[i] = c.hidden[i] * c.dropout_scale[i];
  }
  Vector gh = nn::affine_backward(w.w2, dropped, gm, g.w2, g.b2);
  for (std::size_t i = 0; i < gh.size(); ++i) {
    gh[i] *= c.dropout_scale[i] * nn::silu_grad(c.pre1[i]);
  }
  const Vector gd = nn::affine_backward(w.w1, c.d, gh, g.w1, g.b1);
  if (grads.d.size() != kDescriptorSize) grads.d.assign(kDescriptorSize, 0.0);
  for (std::size_t i = 0; i < kDescriptorSize; ++i) grads.d[i] += gd[i];
}

// Gradients of <adapter_dynamic(d, t), upstream> with dropout disabled.
inline AdapterGradients adapter_backward(std::span<const double> d,
                                         std::size_t t, const AdapterWeights& w,
                                         std::span<const double> upstream) {
  AdapterCache cache;
  adapter_dynamic(d, t, w, false, nullptr, &cache);
  AdapterGradients grads{AdapterWeights::zeros_like(w),
                         Vector(kDescriptorSize, 0.0)};
  adapter_backward(cache, w, upstream, grads);
  return grads;
}

// N x D token matrix used as attention keys and values.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  explicit TokenMatrix(Tensor tokens) : tokens_(std::move(tokens)) {
    if (tokens_.rank() != 2) {
      throw std::invalid_argument("TokenMatrix: expected [N, D]");
    }
  }

  std::size_t count() const { return tokens_.extent(0); }
  std::size_t dim() const { return tokens_.extent(1); }
  const Tensor& tensor() const { return tokens_; }

  std::span<const double> row(std::size_t i) const {
    return tokens_.data().subspan(i * dim(), dim());
  }

 private:
  Tensor tokens_;
};

// [H_img; token] with the token as the last row.
inline TokenMatrix append_token(const TokenMatrix& image_tokens,
                                std::span<const double> token) {
  if (token.size() != image_tokens.dim()) {
    throw std::invalid_argument("append_token: token width " +
                                std::to_string(token.size()) +
                                " does not match D = " +
                                std::to_string(image_tokens.dim()));
  }
  Vector data = image_tokens.tensor().values();
  data.insert(data.end(), token.begin(), token.end());
  return TokenMatrix(Tensor({image_tokens.count() + 1, image_tokens.dim()},
                            std::move(data)));
}

// Single-head attention with keys = values = kv rows:
//   softmax(Q KV^T / sqrt(D)) KV, softmax row-wise with max subtraction.
inline Tensor cross_attention(const Tensor& queries, const TokenMatrix& kv) {
  if (queries.rank() != 2 || queries.extent(1) != kv.dim()) {
    throw std::invalid_argument("cross_attention: query width must equal D");
  }
  const std::size_t m = queries.extent(0), n = kv.count(), dim = kv.dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Tensor out({m, dim});
  Vector logits(n);
  for (std::size_t q = 0; q < m; ++q) {
    const auto qrow = queries.data().subspan(q * dim, dim);
    double peak = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
      const auto krow = kv.row(k);
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += qrow[i] * krow[i];
      logits[k] = dot * scale;
      peak = std::max(peak, logits[k]);
    }
    double z = 0.0;
    for (double& l : logits) {
      l = std::exp(l - peak);
      z += l;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double p = logits[k] / z;
      const auto krow = kv.row(k);
      for (std::size_t i = 0; i < dim; ++i) out(q, i) += p * krow[i];
    }
  }
  return out;
}

}  // namespace dsr
