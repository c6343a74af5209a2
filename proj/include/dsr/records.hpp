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

#include <charconv>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "dsr/degradations.hpp"
#include "dsr/descriptor.hpp"
#include "dsr/gradcheck.hpp"
#include "dsr/sani.hpp"
#include "dsr/training.hpp"

// Text records emitted by the command-line tool.
namespace dsr {

using Json = nlohmann::ordered_json;

// Shortest decimal that parses back to the same double.
inline std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json descriptor_record(const DegradationDescriptor& d,
                              const std::string& image_path,
                              double epsilon = 1e-6) {
  Json j;
  j["raw"] = d.raw;
  j["log1p"] = d.transformed;
  j["image"] = image_path;
  j["epsilon"] = epsilon;
  return j;
}

inline constexpr const char* kSweepCsvHeader =
    "image_id,axis,level,d_blur,d_noise,d_jpeg,d_edge,d_bright,d_contrast";

// Descriptor columns carry the log-transformed values.
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                            SweepAxis axis) {
  os << kSweepCsvHeader << "\n";
  for (const auto& r : rows) {
    os << r.image_id << "," << to_string(axis) << "," << format_real(r.level);
    for (double v : r.descriptor.transformed) os << "," << format_real(v);
    os << "\n";
  }
}

inline Json sani_stats_record(const SaniStats& s) {
  Json j;
  j["lambda"] = s.lambda;
  j["E_levels"] = s.edge_levels;
  j["empirical_std"] = s.empirical_std;
  j["theoretical_std"] = s.theoretical_std;
  j["samples"] = s.samples;
  j["seed"] = s.seed;
  return j;
}

inline Json gradcheck_record(const GradcheckReport& r) {
  Json j;
  j["seed"] = r.seed;
  j["step"] = kGradcheckStep;
  j["tolerance"] = kGradcheckTolerance;
  Json groups = Json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"name", g.name},
                      {"parameters", g.parameters},
                      {"max_relative_error", g.max_relative_error},
                      {"passed", g.passed}});
  }
  j["groups"] = groups;
  j["max_relative_error"] = r.max_relative_error;
  j["passed"] = r.passed;
  return j;
}

inline void write_loss_csv(std::ostream& os, const TrainReport& r) {
  os << "step,loss\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    os << i << "," << format_real(r.losses[i]) << "\n";
  }
}

inline Json train_summary_record(const TrainReport& r) {
  const auto& c = r.config;
  Json j;
  j["first50_mean"] = r.first50_mean;
  j["last50_mean"] = r.last50_mean;
  j["ratio"] = r.ratio;
  j["steps"] = c.steps;
  j["learning_rate"] = c.learning_rate;
  j["lambda"] = c.lambda;
  j["seed"] = c.seed;
  j["use_token"] = c.use_token;
  j["dynamic_token"] = c.dynamic_token;
  j["dropout"] = c.dropout;
  j["batch_size"] = c.batch_size;
  j["D"] = c.adapter.dim;
  j["T"] = c.timesteps;
  j["beta_start"] = c.beta_start;
  j["beta_end"] = c.beta_end;
  j["denoiser_parameters"] = r.denoiser.parameter_count();
  j["adapter_parameters"] = r.adapter.parameter_count();
  return j;
}

}  // namespace dsr
