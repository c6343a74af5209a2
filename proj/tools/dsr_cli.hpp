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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dsr/dsr.hpp"
#include "dsr/records.hpp"

namespace dsr::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsageError = 2 };

struct Config {
  double lambda = kDefaultLambda;
  double epsilon_blur = 1e-6;
  double sobel_threshold = 0.08;
  std::size_t dim = 512;
  std::size_t steps_T = kDefaultSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  std::uint64_t seed = 7;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw std::invalid_argument("lambda must be in [0,1]");
    }
    if (!(epsilon_blur > 0.0)) {
      throw std::invalid_argument("epsilon_blur must be > 0");
    }
    if (dim == 0) throw std::invalid_argument("D must be > 0");
    DiffusionSchedule(steps_T, beta_start, beta_end);
  }

  DescriptorConfig descriptor() const { return {epsilon_blur, sobel_threshold}; }
};

// Keys mirror Config; unknown keys are rejected.
inline Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path + ": cannot open config file");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw IoError(path + ": config must be a JSON object");
  Config c;
  for (const auto& [key, value] : j.items()) {
    if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "epsilon_blur") c.epsilon_blur = value.get<double>();
    else if (key == "sobel_threshold") c.sobel_threshold = value.get<double>();
    else if (key == "D") c.dim = value.get<std::size_t>();
    else if (key == "T") c.steps_T = value.get<std::size_t>();
    else if (key == "beta_start") c.beta_start = value.get<double>();
    else if (key == "beta_end") c.beta_end = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw IoError(path + ": unknown config key '" + key + "'");
  }
  return c;
}

inline std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad level '" + item + "'");
    }
    if (used != item.size()) throw std::invalid_argument("bad level '" + item + "'");
    levels.push_back(v);
  }
  if (levels.empty()) throw std::invalid_argument("no levels given");
  return levels;
}

// Writes to --out when given, otherwise to `fallback`.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw IoError(path + ": cannot open output file");
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Degradation descriptor, degradation token and edge-modulated "
               "diffusion noise toolkit", "dsr"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 7;
  std::string out_path, config_path;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (default 7)");
  app.add_option("--out", out_path, "Write the primary output to this file");
  app.add_option("--config", config_path, "JSON file mirroring Config");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Degradation descriptor of PGM/PPM images");
  std::vector<std::string> analyze_paths;
  analyze->add_option("images", analyze_paths, "Input P5/P6 files")->required();

  // degrade
  auto* degrade = app.add_subcommand("degrade", "Apply a synthetic degradation recipe");
  std::string degrade_in, degrade_out;
  DegradationRecipe recipe;
  degrade->add_option("input", degrade_in, "Input P5/P6 file")->required();
  degrade->add_option("output", degrade_out, "Output P5/P6 file")->required();
  degrade->add_option("--blur", recipe.blur_sigma, "Gaussian blur sigma");
  degrade->add_option("--noise", recipe.noise_sigma, "AWGN sigma");
  degrade->add_option("--block", recipe.block_strength, "8x8 blocking strength in [0,1]");
  degrade->add_option("--brightness", recipe.brightness_shift, "Brightness shift in [-0.5,0.5]");
  degrade->add_option("--contrast", recipe.contrast_scale, "Contrast scale (> 0)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Descriptor sweep over the procedural corpus");
  std::string axis_name, levels_text;
  std::size_t corpus_count = kCorpusSize;
  sweep_cmd->add_option("--axis", axis_name, "blur|noise|block|brightness|contrast")->required();
  sweep_cmd->add_option("--levels", levels_text, "Comma-separated levels")->required();
  sweep_cmd->add_option("--count", corpus_count, "Number of corpus images");

  // sani-stats
  auto* sani_cmd = app.add_subcommand("sani-stats", "Amplitude statistics of edge-modulated noise");
  std::optional<double> lambda_flag;
  std::size_t samples = 1000000;
  sani_cmd->add_option("--lambda", lambda_flag, "Modulation strength in [0,1] (default 0.6)");
  sani_cmd->add_option("--samples", samples, "Samples per edge level");

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "Toy noise-prediction training run");
  TrainConfig train;
  std::optional<double> train_lambda;
  std::string loss_csv, weights_path;
  bool no_token = false, static_token = false, no_dropout = false;
  train_cmd->add_option("--steps", train.steps, "Optimisation steps");
  train_cmd->add_option("--lr", train.learning_rate, "Learning rate");
  train_cmd->add_option("--lambda", train_lambda, "Modulation strength in [0,1] (default 0.6)");
  train_cmd->add_option("--batch", train.batch_size, "Samples per step");
  train_cmd->add_flag("--no-token", no_token, "Train without the degradation token");
  train_cmd->add_flag("--static-token", static_token, "Use the timestep-independent token");
  train_cmd->add_flag("--no-dropout", no_dropout, "Disable adapter dropout");
  train_cmd->add_option("--loss-csv", loss_csv, "Write step,loss CSV here");
  train_cmd->add_option("--weights", weights_path, "Write adapter + TOYD weights here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    Config config;
    if (!config_path.empty()) config = load_config(config_path);
    if (seed_opt->count() > 0) config.seed = seed;
    if (lambda_flag) config.lambda = *lambda_flag;
    if (train_lambda) config.lambda = *train_lambda;
    config.validate();

    Output output(out_path, out);
    std::ostream& os = output.stream();

    if (*analyze) {
      for (const auto& path : analyze_paths) {
        const Image image = read_netpbm_file(path);
        const auto d = descriptor(image, config.descriptor());
        os << descriptor_record(d, path, config.epsilon_blur).dump() << "\n";
      }
      return kOk;
    }
    if (*degrade) {
      recipe.seed = config.seed;
      const Image image = read_netpbm_file(degrade_in);
      write_netpbm_file(degrade_out, apply_recipe(image, recipe));
      return kOk;
    }
    if (*sweep_cmd) {
      const SweepAxis axis = parse_sweep_axis(axis_name);
      const auto levels = parse_levels(levels_text);
      if (corpus_count == 0) throw std::invalid_argument("--count must be > 0");
      const auto rows = sweep(procedural_corpus(corpus_count), axis, levels,
                              config.seed, config.descriptor());
      write_sweep_csv(os, rows, axis);
      return kOk;
    }
    if (*sani_cmd) {
      const auto stats = sani_stats(config.lambda, samples, config.seed);
      os << sani_stats_record(stats).dump(2) << "\n";
      return kOk;
    }
    if (*gradcheck_cmd) {
      const auto report = gradcheck_all(config.seed);
      os << gradcheck_record(report).dump(2) << "\n";
      return report.passed ? kOk : kCheckFailed;
    }
    if (*train_cmd) {
      train.seed = config.seed;
      train.lambda = config.lambda;
      train.use_token = !no_token;
      train.dynamic_token = !static_token;
      train.dropout = !no_dropout;
      train.adapter.dim = config.dim;
      train.timesteps = config.steps_T;
      train.beta_start = config.beta_start;
      train.beta_end = config.beta_end;
      train.descriptor = config.descriptor();
      const auto report = train_toy(make_toy_corpus(), train);
      if (!loss_csv.empty()) {
        std::ofstream csv(loss_csv);
        if (!csv) throw IoError(loss_csv + ": cannot open output file");
        write_loss_csv(csv, report);
      }
      if (!weights_path.empty()) {
        save_weights(weights_path, make_weight_file(report.adapter, &report.denoiser));
      }
      const bool descended = report.ratio <= 0.5;
      Json summary = train_summary_record(report);
      summary["passed"] = descended;
      os << summary.dump(2) << "\n";
      return descended ? kOk : kCheckFailed;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace dsr::cli
