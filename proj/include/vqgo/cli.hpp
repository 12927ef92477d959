// Copyright 2026 The VQGO Authors
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

// Command-line front end: flag parsing, output handling and exit codes.
#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vqgo/experiments.hpp"

namespace vqgo {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitVerifyMismatch = 3 };

inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Variational quantum gate optimization experiments", "vqgo"};
  std::string config_path;
  std::string output_path;
  std::string verify_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("--config", config_path, "experiment configuration (JSON)");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--workers", workers, "worker threads for grid and sweep points");
  app.add_option("--output", output_path, "output path ('-' for stdout)");
  app.add_option("--verify", verify_path, "re-evaluate every row of a CSV produced by this tool");
  app.set_version_flag("--version", std::string(kToolVersion));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  if (!verify_path.empty()) {
    std::ifstream in(verify_path);
    if (!in) {
      err << "vqgo: cannot read " << verify_path << '\n';
      return kExitIo;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      const auto report = verify_csv(ss.str());
      for (const auto& m : report.messages) err << verify_path << ": " << m << '\n';
      out << "verified " << report.rows << " rows, " << report.mismatches << " mismatches, max |error| "
          << report.max_error << '\n';
      return report.mismatches == 0 ? kExitOk : kExitVerifyMismatch;
    } catch (const ConfigError& e) {
      err << verify_path << (e.line() ? ":" + std::to_string(e.line()) : "") << ": " << e.what() << '\n';
      return kExitConfig;
    }
  }

  if (config_path.empty()) {
    err << "vqgo: --config or --verify is required\n";
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) set_seed(cfg, *seed);
    if (workers) set_workers(cfg, *workers);
  } catch (const ConfigError& e) {
    err << config_path << (e.line() ? ":" + std::to_string(e.line()) : "") << ": error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "vqgo: " << e.what() << '\n';
    return kExitIo;
  }

  std::string target = output_path.empty() ? cfg.output : output_path;
  if (target.empty()) target = to_string(cfg.kind) + (cfg.kind == ExperimentKind::single_optimize ? ".json" : ".csv");

  // Fail on an unwritable destination before spending time on the run.
  std::ofstream file;
  if (target != "-") {
    file.open(target, std::ios::out | std::ios::trunc);
    if (!file) {
      err << "vqgo: cannot write " << target << '\n';
      return kExitIo;
    }
  }

  std::string text;
  try {
    text = run_experiment(cfg);
  } catch (const ConfigError& e) {
    err << config_path << (e.line() ? ":" + std::to_string(e.line()) : "") << ": error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ModelError& e) {
    err << config_path << ": error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (target == "-") {
    out << text;
    return kExitOk;
  }
  file << text;
  file.close();
  if (!file) {
    err << "vqgo: write failed for " << target << '\n';
    return kExitIo;
  }
  err << "wrote " << target << '\n';
  return kExitOk;
}

}  // namespace vqgo
