// SPDX-License-Identifier: Apache-2.0
//
// hmimo: energy-efficient MIMO links assisted by nearly-passive metasurfaces
// Copyright (C) 2026 hmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hmimo/harness.hpp"

namespace {

hmimo::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw hmimo::model_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j.get<hmimo::ExperimentConfig>();
}

void print_summary(const hmimo::ExperimentConfig& cfg,
                   const hmimo::SweepResult& result) {
  std::printf("architecture=%s mode=%s sweep=%s draws=%d\n",
              hmimo::to_string(cfg.architecture).c_str(),
              hmimo::to_string(cfg.mode).c_str(),
              hmimo::to_string(cfg.sweep_variable).c_str(),
              cfg.monte_carlo_draws);
  std::printf("%12s  %16s  %16s  %10s  %6s\n", "sweep[dBm]", "mean EE[b/J]",
              "mean C[b/s]", "mean iters", "failed");
  for (const auto& r : result.records)
    std::printf("%12g  %16.6g  %16.6g  %10.2f  %6d\n", r.sweep_value,
                r.mean_ee_bits_per_joule, r.mean_capacity_bps,
                r.mean_outer_iters, r.failed_draws);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo energy-efficiency sweeps for metasurface-assisted "
               "MIMO links"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string mode_override;
  std::int64_t seed_override = -1;
  int draws_override = 0;
  int threads_override = 0;

  CLI::App* run = app.add_subcommand("run", "run the sweep in a config file");
  run->add_option("config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--draws", draws_override,
                  "override the Monte-Carlo draw count");
  run->add_option("--out", out_override, "override the output CSV path");
  run->add_option("--threads", threads_override,
                  "override the worker thread count");
  run->add_option("--mode", mode_override, "override the mode (ee|capacity)");

  CLI11_PARSE(app, argc, argv);

  try {
    hmimo::ExperimentConfig cfg = load_config(config_path);
    if (seed_override >= 0)
      cfg.scenario.seed = static_cast<std::uint64_t>(seed_override);
    if (draws_override > 0) cfg.monte_carlo_draws = draws_override;
    if (!out_override.empty()) cfg.output_path = out_override;
    if (threads_override > 0) cfg.threads = threads_override;
    if (!mode_override.empty()) cfg.mode = hmimo::parse_mode(mode_override);

    const hmimo::SweepResult result = hmimo::run_experiment(cfg);
    hmimo::emit_csv(result, cfg.output_path);
    print_summary(cfg, result);
    std::printf("wrote %s and %s.meta.json\n", cfg.output_path.c_str(),
                cfg.output_path.c_str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
