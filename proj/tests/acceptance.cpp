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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dsr/dsr.hpp"
#include "oracles.hpp"

namespace {

using namespace dsr;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Modulation scale confined to [0.4, 1] for lambda = 0.6.
Outcome amplitude_bound() {
  Rng rng(101);
  double lo = INFINITY, hi = -INFINITY;
  bool ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    Tensor edge({16, 16});
    for (double& v : edge.values()) v = rng.uniform();
    edge[trial % 256] = 0.0;
    edge[(trial + 7) % 256] = 1.0;
    const Tensor s = modulate_noise(Tensor({4, 16, 16}, 1.0), edge, 0.6);
    for (double v : s.values()) {
      ok = ok && v >= 0.4 && v <= 1.0;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {ok && lo == 0.4 && hi == 1.0,
          fmt("200 random E maps, scale range [%.17g, %.17g]", lo, hi)};
}

// 2. Var(z_t) = (1 - ab_t)(1 - lambda E)^2 within 2%.
Outcome variance_law() {
  const auto schedule = make_schedule();
  const std::size_t n = 100000;
  const double lambda = 0.6;
  double worst = 0.0, factor_at_edge = 0.0;
  std::uint64_t stream = 0;
  for (double e : {0.0, 0.5, 1.0}) {
    for (std::size_t t : {1u, 500u, 1000u}) {
      Rng rng = Rng::derive(202, stream++);
      const Tensor eps = gaussian({1, 1, n}, rng);
      const Tensor mod = modulate_noise(eps, Tensor({1, n}, e), lambda);
      const Tensor z = noisy_latent(Tensor({1, 1, n}, 0.3), mod, t, schedule);
      const auto ms = mean_std(z.data());
      const double var = ms.stddev * ms.stddev;
      const double expected = (1.0 - schedule.alpha_bar(t)) * std::pow(1.0 - lambda * e, 2);
      worst = std::max(worst, std::abs(var / expected - 1.0));
      if (e == 1.0 && t == 500) factor_at_edge = var / (1.0 - schedule.alpha_bar(t));
    }
  }
  return {worst < 0.02,
          fmt("9 (E,t) cells at 1e5 samples, worst relative deviation %.4f; "
              "measured variance factor at E=1 %.4f (expected %.4f)",
              worst, factor_at_edge, std::pow(1.0 - lambda, 2))};
}

// 3. Adapter parameter count.
Outcome parameter_count() {
  const std::size_t n = AdapterWeights::zeros().parameter_count();
  return {n == 216576, fmt("%zu parameters at D=512", n)};
}

// 4. Dynamic adapter with zeroed timestep MLP equals the static adapter.
Outcome static_dynamic_identity() {
  Rng rng(404);
  AdapterWeights w = AdapterWeights::init({}, rng);
  for (double& v : w.ln_gain.values()) v = rng.uniform(0.5, 1.5);
  for (double& v : w.ln_bias.values()) v = rng.uniform(-0.5, 0.5);
  w.t_w1 = Tensor(w.t_w1.shape());
  w.t_b1 = Tensor(w.t_b1.shape());
  w.t_w2 = Tensor(w.t_w2.shape());
  w.t_b2 = Tensor(w.t_b2.shape());
  bool ok = true;
  std::size_t cases = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto d = descriptor(procedural_image(i)).transformed;
    const Vector dv(d.begin(), d.end());
    const Vector s = adapter_static(dv, w);
    for (std::size_t t : {1u, 250u, 1000u}) {
      ok = ok && adapter_dynamic(dv, t, w) == s;
      ++cases;
    }
  }
  return {ok, fmt("%zu (descriptor, t) cases bit-identical", cases)};
}

// 5. Finite-difference check of every parameter group.
Outcome gradient_check() {
  const auto r = gradcheck_all(0);
  std::string groups;
  for (const auto& g : r.groups) {
    groups += fmt(" %s=%.2e", g.name.c_str(), g.max_relative_error);
  }
  return {r.passed && r.max_relative_error < 1e-5,
          fmt("max relative error %.3e;", r.max_relative_error) + groups};
}

// 6. Descriptor monotonicity and constant-image closed form.
Outcome descriptor_monotonicity() {
  const auto corpus = procedural_corpus();
  struct Axis {
    SweepAxis axis;
    std::vector<double> levels;
    DescriptorIndex index;
  };
  const std::vector<Axis> axes = {
      {SweepAxis::kBlur, {0, 0.5, 1, 1.5, 2, 3}, kBlur},
      {SweepAxis::kNoise, {0, 0.02, 0.05, 0.1, 0.2}, kNoise},
      {SweepAxis::kBlock, {0, 0.25, 0.5, 0.75, 1}, kJpeg},
  };
  bool ok = true;
  std::string detail;
  for (const auto& a : axes) {
    const auto rows = sweep(corpus, a.axis, a.levels, 606);
    std::size_t pairs = 0, monotone = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      if (rows[i].image_id != rows[i + 1].image_id) continue;
      ++pairs;
      monotone += rows[i + 1].descriptor.raw[a.index] >= rows[i].descriptor.raw[a.index];
    }
    const double frac = static_cast<double>(monotone) / static_cast<double>(pairs);
    ok = ok && frac >= 0.95;
    detail += fmt("%s %zu/%zu, ", std::string(to_string(a.axis)).c_str(), monotone, pairs);
  }
  const DescriptorVector expected = {std::log1p(1e6), 0, 0, 0, std::log1p(0.5), 0};
  const bool closed = descriptor(Image(64, 64, 1, 0.5)).transformed == expected &&
                      descriptor(Image(64, 64, 3, 0.5)).transformed == expected;
  ok = ok && closed;
  return {ok, detail + (closed ? "constant image closed form exact"
                               : "constant image closed form MISMATCH")};
}

// 7. Attention token-injection contracts.
Outcome attention_contracts() {
  Rng rng(707);
  const TokenMatrix image_tokens(gaussian({16, 512}, rng));
  const Tensor token = gaussian({512}, rng);
  const TokenMatrix kv = append_token(image_tokens, token.data());
  const bool shape_ok = kv.count() == 17 && kv.dim() == 512;

  const Tensor q = gaussian({8, 512}, rng);
  std::vector<std::size_t> perm(kv.count());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 5 + 3) % perm.size();
  Tensor shuffled({kv.count(), 512});
  for (std::size_t r = 0; r < kv.count(); ++r)
    for (std::size_t c = 0; c < 512; ++c) shuffled(r, c) = kv.tensor()(perm[r], c);
  const Tensor a = cross_attention(q, kv);
  const Tensor b = cross_attention(q, TokenMatrix(shuffled));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));

  const Tensor single = cross_attention(q, TokenMatrix(Tensor({1, 512}, token.values())));
  bool single_ok = true;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 512; ++c) single_ok = single_ok && single(r, c) == token[c];

  return {shape_ok && diff <= 1e-12 && single_ok,
          fmt("appended shape %zux%zu, permutation max diff %.2e, single token %s",
              kv.count(), kv.dim(), diff, single_ok ? "exact" : "MISMATCH")};
}

// 8. Toy training descent and scalar-gain convergence.
Outcome training_descent() {
  const auto report = train_toy(make_toy_corpus(), TrainConfig{});
  const auto fit = fit_scalar_gain(0.5, 500, make_schedule(), 20000, 1e-2, 7);
  const double gain_err = std::abs(fit.gain / fit.optimum - 1.0);
  return {report.ratio <= 0.5 && gain_err <= 0.02,
          fmt("loss ratio %.4f over %zu steps (first50 %.4f, last50 %.4f); "
              "scalar gain %.5f vs optimum %.5f (%.2f%%)",
              report.ratio, report.losses.size(), report.first50_mean,
              report.last50_mean, fit.gain, fit.optimum, 100 * gain_err)};
}

// 9. lambda = 0 without token equals plain DDPM training.
Outcome lambda_zero_reduction() {
  TrainConfig c;
  c.steps = 100;
  c.lambda = 0.0;
  c.use_token = false;
  const auto corpus = make_toy_corpus();
  const auto report = train_toy(corpus, c);
  const auto reference = oracle::ddpm_reference_losses(corpus, c);
  std::size_t equal = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    equal += report.losses[i] == reference[i];
  }
  return {equal == reference.size() && report.losses.size() == reference.size(),
          fmt("%zu/%zu step losses bit-identical", equal, reference.size())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "amplitude bound", 1, amplitude_bound},
      {2, "variance law", 30, variance_law},
      {3, "adapter parameter count", 1, parameter_count},
      {4, "static/dynamic identity", 1, static_dynamic_identity},
      {5, "gradient verification", 60, gradient_check},
      {6, "descriptor monotonicity", 60, descriptor_monotonicity},
      {7, "attention token injection", 1, attention_contracts},
      {8, "toy training descent", 120, training_descent},
      {9, "lambda=0 reduction", 60, lambda_zero_reduction},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool passed = o.passed && in_time;
    failures += !passed;
    std::printf("[%s] %d %s: %s (%.2f s, budget %.0f s)\n", passed ? "PASS" : "FAIL",
                c.id, c.name, o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
