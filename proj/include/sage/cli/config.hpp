// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration. The file format is flat `key = value` lines grouped
// under `[subcommand]` headers; `#` starts a comment. A file may carry
// sections for several subcommands; only the active one is read. Unknown
// sections and unknown keys are errors.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sage/errors.hpp"

namespace sage::cli {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Subcommand { verify_decomposition, counterexample, motivating, scale_invariance, toy2d, train };

std::string to_string(Subcommand s);
std::optional<Subcommand> subcommand_from_string(std::string_view name);
const std::vector<Subcommand>& all_subcommands();

struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> lines;  // source line of each entry
};

struct ConfigText {
  std::vector<ConfigSection> sections;
  const ConfigSection* find(std::string_view name) const;
};

ConfigText parse_config_text(std::string_view text);

// Binds config keys to struct fields for parsing and echoing.
class KeyBinder {
 public:
  template <typename T>
  void bind(std::string key, T& field);

  // Throws ConfigError on an unknown key, a repeated key or a bad value.
  void apply(const ConfigSection& section) const;
  std::string echo() const;

 private:
  struct Entry {
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  std::vector<Entry> entries_;
};

struct DecompositionConfig {
  std::string family = "flat_misaligned";  // flat_misaligned | aligned_sharp | zero
  double m = 10.0;
  std::vector<std::size_t> ks{1, 2, 5, 10};
  std::vector<double> sigmas{0.0, 0.1, 0.3};
  std::size_t trials = 100000;
  std::string meta = "uniform_finite";
  std::string solver = "closed_form";

  void bind(KeyBinder& b);
  void validate() const;
  bool operator==(const DecompositionConfig&) const = default;
};

struct CounterexampleConfig {
  std::vector<double> ms{1.5, 2.0, 10.0, 100.0};
  std::vector<std::string> variants{"flat_misaligned", "aligned_sharp"};
  std::size_t decoupling_replacements = 5;

  void bind(KeyBinder& b);
  void validate() const;
  bool operator==(const CounterexampleConfig&) const = default;
};

struct MotivatingConfig {
  double mu_inv = 1.0;
  double var_inv = 9.0;
  double mu_spur = 2.0;
  double var_spur = 0.01;
  double delta = 0.1;
  double remainder_cubic = 0.01;
  std::vector<std::size_t> remainder_ks{4, 16, 64};

  void bind(KeyBinder& b);
  void validate() const;
  bool operator==(const MotivatingConfig&) const = default;
};

struct ScaleInvarianceConfig {
  std::vector<double> alphas{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
  std::size_t train_steps = 5000;
  double lr = 0.02;
  double rho = 1e-3;
  int ns_iters = 5;
  double adaptive_eta = 0.01;
  std::size_t hidden = 64;
  double init_std = 1.0;
  double spectral_max_ratio = 1.5;
  double sam_min_ratio = 5.0;
  double nobias_rel_tol = 1e-6;

  void bind(KeyBinder& b);
  void validate() const;
  bool operator==(const ScaleInvarianceConfig&) const = default;
};

struct Toy2dConfig {
  std::size_t seeds = 100;
  std::size_t steps = 3000;
  double lr = 0.05;
  double rho = 0.05;
  double gamma = 5.0;
  double sigma_sgld = 0.01;
  std::vector<double> start{-1.4, 0.4};
  double start_jitter = 0.05;
  double margin = 0.2;
  std::vector<std::string> steppers{"erm", "sam", "sgld", "sage_noise"};
  std::size_t trajectory_stride = 25;

  void bind(KeyBinder& b);
  void validate() const;
  bool operator==(const Toy2dConfig&) const = default;
};

struct TrainConfig {
  std::string problem = "gaussian_domains";  // gaussian_domains | quadratic | mlp | toy2d
  std::string stepper = "sage";              // erm | sam | sgld | sage
  std::size_t steps = 2000;
  std::string base = "sgd";  // sgd | adam
  double lr = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::string rule = "spectral";  // perturbation rule for sam and sage
  double rho = 0.01;
  int ns_iters = 5;
  double adaptive_eta = 0.01;
  double gamma = 0.01;
  double sigma_sgld = 0.01;
  std::vector<double> init;  // empty: the problem's default start
  std::string quadratic_variant = "flat_misaligned";
  double quadratic_m = 10.0;
  bool mlp_bias = true;
  std::size_t hidden = 64;
  // Gate on distance to the closed-form aggregate minimiser (gaussian_domains
  // and quadratic only); 0 disables it.
  double target_tolerance = 0.05;
  std::string resume_from;  // state.bin from an earlier run

  void bind(KeyBinder& b);
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

using SubcommandConfig = std::variant<DecompositionConfig, CounterexampleConfig, MotivatingConfig,
                                      ScaleInvarianceConfig, Toy2dConfig, TrainConfig>;

struct RunConfig {
  Subcommand subcommand = Subcommand::train;
  std::uint64_t seed = 0;
  SubcommandConfig params;

  bool operator==(const RunConfig&) const = default;
};

RunConfig default_config(Subcommand s);

// Reads the section named after `s` (defaults when absent) and validates.
RunConfig resolve_config(Subcommand s, const ConfigText& text);
RunConfig resolve_config(Subcommand s, std::string_view text);

// Every key with its resolved value; re-parsing gives back the same config.
std::string echo_config(const RunConfig& cfg);

}  // namespace sage::cli
