// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// sage-opt <subcommand> --config <path> [--out <dir>] [--seed <u64>]

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sage/cli/commands.hpp"
#include "sage/cli/config.hpp"
#include "sage/cli/manifest.hpp"
#include "sage/errors.hpp"

int main(int argc, char** argv) {
  using namespace sage::cli;
  CLI::App app{"SAGE optimizer experiments and theory checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;

  for (Subcommand s : all_subcommands()) {
    CLI::App* sub = app.add_subcommand(to_string(s), "run " + to_string(s));
    sub->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) { seed_given = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  const Subcommand sub = *subcommand_from_string(app.get_subcommands().front()->get_name());
  RunConfig cfg;
  try {
    cfg = resolve_config(sub, read_text(config_path));
    if (seed_given) cfg.seed = seed;
  } catch (const sage::Error& e) {
    std::cerr << "sage-opt: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return run_command(cfg, out_dir, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "sage-opt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sage::InvalidArgument& e) {
    std::cerr << "sage-opt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sage::Error& e) {
    std::cerr << "sage-opt: " << e.what() << "\n";
    return kExitGateFailure;
  }
}
