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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsr/adapter.hpp"
#include "dsr/denoiser.hpp"
#include "dsr/rng.hpp"

namespace dsr {

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-5;
// Denominator floor of the relative error; below it the error is measured
// against this scale instead of the (vanishing) gradient.
inline constexpr double kGradcheckFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / scale;
}

struct GradcheckGroup {
  std::string name;
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::uint64_t seed = 0;
  std::vector<GradcheckGroup> groups;
  double max_relative_error = 0.0;
  bool passed = true;
};

// Small random end-to-end fixture: descriptor -> adapter token -> toy
// denoiser -> MSE against a target.
struct GradcheckFixture {
  AdapterWeights adapter;
  ToyDenoiser denoiser;
  Vector d;
  Tensor z_t, target;
  std::size_t t = 1;
  bool dynamic = true;

  static GradcheckFixture make(std::uint64_t seed, bool dynamic) {
    Rng rng(seed);
    GradcheckFixture f;
    const AdapterShape as{8, 12, 8, 10};
    f.adapter = AdapterWeights::init(as, rng);
    for (double& v : f.adapter.ln_gain.values()) v = rng.uniform(0.5, 1.5);
    for (double& v : f.adapter.ln_bias.values()) v = rng.uniform(-0.5, 0.5);
    f.denoiser = ToyDenoiser::init({2, 3, as.dim, 1000}, rng);
    for (double& v : f.denoiser.time_w.values()) v = rng.uniform(-1.0, 1.0);
    // Strong token coupling keeps adapter gradients well above the
    // finite-difference round-off floor.
    for (double& v : f.denoiser.cond_w.values()) v = rng.uniform(-3.0, 3.0);
    f.d.resize(kDescriptorSize);
    for (double& v : f.d) v = rng.uniform(0.0, 2.0);
    f.z_t = Tensor({2, 4, 4});
    f.target = Tensor({2, 4, 4});
    for (double& v : f.z_t.values()) v = rng.normal();
    for (double& v : f.target.values()) v = rng.normal();
    f.t = static_cast<std::size_t>(rng.uniform_int(1, 1000));
    f.dynamic = dynamic;
    return f;
  }

  double loss() const {
    const Vector token = dynamic ? adapter_dynamic(d, t, adapter)
                                 : adapter_static(d, adapter);
    return training_loss(
        toy_forward(denoiser, z_t, t, std::span<const double>(token)), target);
  }

  // Analytic gradients of loss() with respect to every parameter.
  std::pair<AdapterWeights, ToyDenoiser> gradients(double upstream_scale = 1.0) const {
    AdapterCache acache;
    const Vector token = dynamic
                             ? adapter_dynamic(d, t, adapter, false, nullptr, &acache)
                             : adapter_static(d, adapter, false, nullptr, &acache);
    DenoiserCache dcache;
    const Tensor pred =
        toy_forward(denoiser, z_t, t, std::span<const double>(token), &dcache);
    ToyDenoiser dgrads = ToyDenoiser::zeros(denoiser.shape);
    const Tensor g = training_loss_grad(pred, target, upstream_scale);
    const Vector gtoken = toy_backward(denoiser, dcache, g, dgrads);
    AdapterGradients agrads{AdapterWeights::zeros_like(adapter), {}};
    adapter_backward(acache, adapter, gtoken, agrads);
    return {std::move(agrads.weights), std::move(dgrads)};
  }
};

inline std::string adapter_group(const std::string& name) {
  if (name == "ln_gain" || name == "ln_bias") return "adapter.layernorm";
  if (name.rfind("t_", 0) == 0) return "adapter.timestep_mlp";
  return "adapter.mlp";
}

inline std::string denoiser_group(const std::string& name) {
  if (name.rfind("cond_", 0) == 0) return "denoiser.cond_head";
  if (name == "time_w") return "denoiser.time";
  return "denoiser.conv";
}

// Central finite differences over every trainable parameter of the adapter
// and the toy denoiser, for both the dynamic and the static token path.
inline GradcheckReport gradcheck_all(std::uint64_t seed = 0) {
  std::map<std::string, GradcheckGroup> groups;
  auto record = [&groups](const std::string& group, double err) {
    auto& g = groups[group];
    g.name = group;
    ++g.parameters;
    g.max_relative_error = std::max(g.max_relative_error, err);
  };

  for (bool dynamic : {true, false}) {
    GradcheckFixture f = GradcheckFixture::make(seed, dynamic);
    const auto [agrad, dgrad] = f.gradients();

    auto check = [&](Tensor& param, const Tensor& analytic,
                     const std::string& group) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + kGradcheckStep;
        const double up = f.loss();
        param[i] = saved - kGradcheckStep;
        const double down = f.loss();
        param[i] = saved;
        const double numeric = (up - down) / (2.0 * kGradcheckStep);
        record(group, relative_error(analytic[i], numeric));
      }
    };

    std::vector<const Tensor*> a_an;
    agrad.for_each([&](const char*, const Tensor& t) { a_an.push_back(&t); });
    std::size_t k = 0;
    f.adapter.for_each([&](const char* name, Tensor& p) {
      check(p, *a_an[k++], adapter_group(name));
    });

    std::vector<const Tensor*> d_an;
    dgrad.for_each([&](const char*, const Tensor& t) { d_an.push_back(&t); });
    k = 0;
    f.denoiser.for_each([&](const char* name, Tensor& p) {
      check(p, *d_an[k++], denoiser_group(name));
    });
  }

  GradcheckReport report;
  report.seed = seed;
  for (auto& [name, g] : groups) {
    g.passed = g.max_relative_error < kGradcheckTolerance;
    report.max_relative_error =
        std::max(report.max_relative_error, g.max_relative_error);
    report.passed = report.passed && g.passed;
    report.groups.push_back(g);
  }
  return report;
}

}  // namespace dsr
