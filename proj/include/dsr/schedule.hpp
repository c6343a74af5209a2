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
#include <stdexcept>
#include <string>
#include <vector>

namespace dsr {

// Linear-beta DDPM schedule. Timesteps are 1-based: t in [1, T].
class DiffusionSchedule {
 public:
  DiffusionSchedule(std::size_t steps, double beta_start, double beta_end) {
    if (steps == 0) throw std::invalid_argument("schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
      throw std::invalid_argument(
          "schedule: need 0 < beta_start <= beta_end < 1");
    }
    beta_.resize(steps);
    alpha_.resize(steps);
    alpha_bar_.resize(steps);
    double prod = 1.0;
    for (std::size_t i = 0; i < steps; ++i) {
      const double frac = steps == 1 ? 0.0
                                     : static_cast<double>(i) /
                                           static_cast<double>(steps - 1);
      beta_[i] = beta_start + (beta_end - beta_start) * frac;
      alpha_[i] = 1.0 - beta_[i];
      prod *= alpha_[i];
      alpha_bar_[i] = prod;
    }
  }

  std::size_t steps() const { return beta_.size(); }

  double beta(std::size_t t) const { return beta_[index(t)]; }
  double alpha(std::size_t t) const { return alpha_[index(t)]; }
  double alpha_bar(std::size_t t) const { return alpha_bar_[index(t)]; }

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  std::size_t index(std::size_t t) const {
    if (t < 1 || t > beta_.size()) {
      throw std::invalid_argument("schedule: timestep " + std::to_string(t) +
                                  " outside [1, " +
                                  std::to_string(beta_.size()) + "]");
    }
    return t - 1;
  }

  std::vector<double> beta_, alpha_, alpha_bar_;
};

inline constexpr std::size_t kDefaultSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

inline DiffusionSchedule make_schedule(std::size_t steps = kDefaultSteps,
                                       double beta_start = kDefaultBetaStart,
                                       double beta_end = kDefaultBetaEnd) {
  return DiffusionSchedule(steps, beta_start, beta_end);
}

}  // namespace dsr
