// Copyright 2026 The ebstop Authors
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

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "acceptance/acceptance_suite.hpp"
#include "ebs/harness.hpp"

namespace {

// Exit codes: 0 success, 1 failed checks, 2 usage or config errors,
// 3 diverged training, 4 I/O errors.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

int do_run(const std::string& config_path,
           const std::vector<std::string>& overrides) {
  ebs::RunConfig cfg = ebs::load_config(config_path);
  for (const std::string& s : overrides) ebs::apply_override(cfg, s);
  ebs::validate_config(cfg);
  const ebs::RunOutput out = ebs::run(cfg);
  ebs::write_summary(std::cout, cfg, out.summary);
  return kExitOk;
}

int do_compare(const std::vector<std::string>& config_paths,
               const std::vector<std::string>& overrides) {
  std::vector<std::pair<std::string, ebs::RunConfig>> runs;
  for (const std::string& path : config_paths) {
    ebs::RunConfig cfg = ebs::load_config(path);
    for (const std::string& s : overrides) ebs::apply_override(cfg, s);
    ebs::validate_config(cfg);
    runs.emplace_back(std::filesystem::path(path).stem().string(),
                      std::move(cfg));
  }
  const std::vector<ebs::CompareRow> rows = ebs::compare(runs);
  ebs::print_compare_table(std::cout, rows);
  return kExitOk;
}

int do_gradcheck(std::uint64_t seed) {
  const auto results = ebs::gradient_check_suite(seed);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-22s max_rel_err=%.3e %s\n", r.name.c_str(), r.max_rel_err,
                r.pass ? "[PASS]" : "[FAIL]");
    all_pass = all_pass && r.pass;
  }
  std::printf("gradcheck: %s\n", all_pass ? "all gradients match" : "FAILED");
  return all_pass ? kExitOk : kExitCheckFailed;
}

int do_repro(const std::string& data_path, int only) {
  ebs::acceptance::Options options;
  options.data_path = data_path;
  options.only = only;
  options.progress = &std::cout;
  const auto results = ebs::acceptance::run_all(options);
  return ebs::acceptance::report(results, std::cout) == 0 ? kExitOk
                                                          : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ebstop: gradient-noise based early stopping experiments.\n"
      "Trains configurable problems and decides when to stop from the "
      "evidence in the gradient signal-to-noise ratio, without a held-out "
      "validation set."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ebstop 0.1.0");

  std::string run_config;
  std::vector<std::string> run_overrides;
  std::uint64_t run_seed = 0;
  std::string run_out;
  long run_max_steps = 0;
  CLI::App* cmd_run = app.add_subcommand(
      "run", "Train one configuration and report where it stopped");
  cmd_run->add_option("--config", run_config, "Config file with key = value lines")
      ->required();
  cmd_run->add_option("--set", run_overrides,
                      "Override a config entry, e.g. --set seed=7");
  cmd_run->add_option("--seed", run_seed, "Shorthand for --set seed=N");
  cmd_run->add_option("--out", run_out, "Shorthand for --set out=PATH");
  cmd_run->add_option("--max-steps", run_max_steps,
                      "Shorthand for --set max_steps=N");

  std::vector<std::string> cmp_configs;
  std::vector<std::string> cmp_overrides;
  CLI::App* cmd_compare = app.add_subcommand(
      "compare",
      "Run several stopping rules on one problem instance and tabulate "
      "stop step, test loss and regret against the hindsight optimum");
  cmd_compare
      ->add_option("--config", cmp_configs,
                   "Config file; repeat once per run to compare")
      ->required();
  cmd_compare->add_option("--set", cmp_overrides,
                          "Override applied to every config");

  std::uint64_t grad_seed = 20260823;
  CLI::App* cmd_grad = app.add_subcommand(
      "gradcheck",
      "Compare every analytic gradient with central finite differences");
  cmd_grad->add_option("--seed", grad_seed, "Seed for the probe points");

  std::string repro_data = "data/wdbc.data";
  int repro_only = 0;
  CLI::App* cmd_repro = app.add_subcommand(
      "repro", "Run the bundled end-to-end checks and experiments");
  cmd_repro->add_option("--data", repro_data,
                        "Path to the diagnosis CSV (32-column layout)");
  cmd_repro->add_option("--only", repro_only,
                        "Run a single check by number (1-11)")
      ->check(CLI::Range(1, 11));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_run->parsed()) {
      if (cmd_run->count("--seed"))
        run_overrides.push_back("seed=" + std::to_string(run_seed));
      if (cmd_run->count("--out")) run_overrides.push_back("out=" + run_out);
      if (cmd_run->count("--max-steps"))
        run_overrides.push_back("max_steps=" + std::to_string(run_max_steps));
      return do_run(run_config, run_overrides);
    }
    if (cmd_compare->parsed()) return do_compare(cmp_configs, cmp_overrides);
    if (cmd_grad->parsed()) return do_gradcheck(grad_seed);
    if (cmd_repro->parsed()) return do_repro(repro_data, repro_only);
  } catch (const ebs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ebs::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const ebs::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}
