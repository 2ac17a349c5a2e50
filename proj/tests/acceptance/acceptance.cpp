// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one line per criterion:
//   criterion <n> <name>: PASS|FAIL <measurements> [<seconds>s]
// Usage: sage_acceptance [n ...]   (no arguments runs all eight)
// Exit status 0 iff every selected criterion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common/grad_check.hpp"
#include "common/random_matrices.hpp"
#include "sage/cli/commands.hpp"
#include "sage/cli/config.hpp"
#include "sage/errors.hpp"
#include "sage/optim.hpp"
#include "sage/problems.hpp"
#include "sage/stats.hpp"
#include "sage/theorylab.hpp"

namespace {

using namespace sage;

constexpr std::uint64_t kSeed = 2026;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome theorem_exactness() {
  cli::DecompositionConfig cfg;  // flat_misaligned, M = 10, K {1,2,5,10} x sigma {0,0.1,0.3}, 1e5 trials
  const double m = cfg.m;
  const auto reports = cli::run_decomposition(cfg, kSeed);
  Outcome o{true, ""};
  double worst_z = 0.0;
  for (const auto& r : reports) {
    // Closed form by hand: tr(A^-1 Sigma) = 2M, tr(A) = 1/M.
    const double align = 2.0 * m / (2.0 * static_cast<double>(r.k));
    const double curv = r.sigma * r.sigma * (1.0 / m) / 2.0;
    if (std::abs(r.alignment_term - align) > 1e-12 * align || std::abs(r.curvature_term - curv) > 1e-15) {
      o.pass = false;
      o.detail += " closed-form mismatch at K=" + std::to_string(r.k);
    }
    if (!r.within_three_se()) {
      o.pass = false;
      o.detail += " K=" + std::to_string(r.k) + ",sigma=" + num(r.sigma) + " outside 3 SE";
    }
    if (r.mc_excess_se > 0.0) worst_z = std::max(worst_z, std::abs(r.mc_excess_mean - r.closed_form()) / r.mc_excess_se);
    if (r.trials != 100000) o.pass = false;
  }
  o.detail = std::to_string(reports.size()) + " cells x 1e5 trials, max |mean-closed|/SE " + num(worst_z) + o.detail;
  return o;
}

// ---------------------------------------------------------------- 2

Outcome counterexamples() {
  Outcome o{true, ""};
  double worst = 0.0;
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  for (double m : {2.0, 10.0, 100.0}) {
    const auto i = build_counterexample(m, CounterexampleVariant::flat_misaligned);
    const auto ii = build_counterexample(m, CounterexampleVariant::aligned_sharp);
    for (double e : {rel(i.tr_h, 1.0 / m), rel(i.tr_hinv_sigma, 2.0 * m), rel(ii.tr_h, m), rel(ii.tr_hinv_sigma, 1.0 / m)}) {
      worst = std::max(worst, e);
    }
  }
  o.pass = worst <= 1e-10;
  o.detail = "M in {2,10,100}, both variants, max rel error " + num(worst);
  return o;
}

// ---------------------------------------------------------------- 3

Outcome motivating() {
  const MotivatingReport r = motivating_example_report();
  struct Check {
    const char* name;
    double got, want, tol;
  };
  const std::vector<Check> checks{
      {"H[0][0]", r.h_bar(0, 0), 10.0, 1e-12},
      {"H[0][1]", r.h_bar(0, 1), 0.0, 1e-12},
      {"H[1][0]", r.h_bar(1, 0), 0.0, 1e-12},
      {"H[1][1]", r.h_bar(1, 1), 4.01, 1e-12},
      {"theta*[0]", r.theta_star[0], 0.1, 1e-10},
      {"theta*[1]", r.theta_star[1], 0.0, 1e-10},
      {"gradL1(0)[0]", r.grads_at_origin[0][0], -1.0, 1e-12},
      {"gradL1(0)[1]", r.grads_at_origin[0][1], -2.0, 1e-12},
      {"gradL2(0)[0]", r.grads_at_origin[1][0], -1.0, 1e-12},
      {"gradL2(0)[1]", r.grads_at_origin[1][1], 2.0, 1e-12},
      {"Sigma[0][0]", r.sigma_g_star(0, 0), 0.0, 1e-10},
      {"Sigma[0][1]", r.sigma_g_star(0, 1), 0.0, 1e-10},
      {"Sigma[1][0]", r.sigma_g_star(1, 0), 0.0, 1e-10},
      {"Sigma[1][1]", r.sigma_g_star(1, 1), 3.24, 1e-10},
      {"tr(H^-1 Sigma)", r.tr_hinv_sigma, 0.80798, 1e-5},
      {"opt1[0]", r.domain_optima[0][0], 0.0003, 5e-4},
      {"opt1[1]", r.domain_optima[0][1], 0.499, 5e-4},
      {"opt2[0]", r.domain_optima[1][0], 0.0003, 5e-4},
      {"opt2[1]", r.domain_optima[1][1], -0.499, 5e-4},
      {"5 delta^2", r.loss_increase, 0.05, 1e-10},
  };
  Outcome o{true, ""};
  for (const auto& c : checks) {
    if (!(std::abs(c.got - c.want) <= c.tol)) {
      o.pass = false;
      o.detail += std::string(" ") + c.name + "=" + num(c.got);
    }
  }
  o.detail = std::to_string(checks.size()) + " reference values" + (o.pass ? " matched" : " mismatched:" + o.detail);
  return o;
}

// ---------------------------------------------------------------- 4

Outcome newton_schulz() {
  double worst = 0.0, worst_scale = 0.0;
  std::size_t within = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto eng = Rng(kSeed).split(Purpose::random_test, 4, t).engine();
    std::uniform_int_distribution<std::size_t> dim(2, 16);
    std::uniform_real_distribution<double> log_cond(0.0, 2.0);
    const std::size_t rows = dim(eng), cols = dim(eng);
    const Matrix g = testing::random_conditioned(rows, cols, std::pow(10.0, log_cond(eng)), eng);
    const Matrix ns = newton_schulz_polar(g, 5);
    const double err = frobenius_norm(ns - svd_polar_oracle(g));
    worst = std::max(worst, err);
    if (err <= 1e-5) ++within;
    for (double c : {1e-3, 1.0, 1e3}) worst_scale = std::max(worst_scale, max_abs_diff(newton_schulz_polar(g * c, 5), ns));
  }
  Outcome o;
  o.pass = worst <= 1e-5 && worst_scale <= 1e-12;
  o.detail = "max ||NS(G,5) - polar(G)||_F " + num(worst) + " (" + std::to_string(within) +
             "/100 within 1e-5), max scale deviation " + num(worst_scale);
  return o;
}

// ---------------------------------------------------------------- 5

Outcome scale_invariance() {
  const cli::ScaleInvarianceConfig cfg;
  const auto r = cli::run_scale_invariance(cfg, kSeed);
  Outcome o;
  o.pass = r.passed();
  o.detail = "no-bias spectral max rel deviation " + num(r.no_bias.spectral_max_rel_deviation()) +
             ", with-bias spectral ratio " + num(r.with_bias.ratio_spectral()) + ", sam_l2 ratio " +
             num(r.with_bias.ratio_sam());
  return o;
}

// ---------------------------------------------------------------- 6

Outcome toy2d() {
  const cli::Toy2dConfig cfg;
  const auto r = cli::run_toy2d(cfg, kSeed);
  Outcome o;
  o.pass = r.passed();
  std::ostringstream s;
  s << "fraction at B over " << cfg.seeds << " seeds:";
  for (const auto& name : cfg.steppers) s << " " << name << "=" << num(r.fraction_b.at(name));
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------- 7

Outcome algorithm_conformance() {
  const EnvList envs = gaussian_domain_envs();
  const Rng rng(kSeed);
  Outcome o{true, ""};
  const std::size_t steps = 500;

  // Pass count, on the two-domain task and the MLP.
  int min_rounds = 1 << 30, max_rounds = 0;
  {
    SageConfig cfg;
    cfg.gamma = 0.1;
    cfg.rule.rho = 0.05;
    cfg.base = SgdBase{0.05};
    OptimState st(make_theta({0.0, 0.0}));
    for (std::size_t i = 0; i < steps; ++i) {
      const StepReport rep = sage_step(st, envs, cfg, rng);
      min_rounds = std::min(min_rounds, rep.grad_rounds);
      max_rounds = std::max(max_rounds, rep.grad_rounds);
      if (rep.env_evaluations != 2 * static_cast<int>(envs.size())) o.pass = false;
    }
    const MlpProblem mlp = mlp_problem(kSeed, true);
    OptimState ms(mlp.init);
    for (int i = 0; i < 20; ++i) {
      const StepReport rep = sage_step(ms, mlp.envs, cfg, rng);
      min_rounds = std::min(min_rounds, rep.grad_rounds);
      max_rounds = std::max(max_rounds, rep.grad_rounds);
    }
  }
  if (min_rounds != 2 || max_rounds != 2) o.pass = false;

  // gamma = 0 with the sam_l2 rule against the SAM stepper.
  bool identical = true;
  {
    SageConfig cfg;
    cfg.gamma = 0.0;
    cfg.rule.kind = PerturbationKind::sam_l2;
    cfg.rule.rho = 0.05;
    cfg.base = SgdBase{0.05};
    OptimState a(make_theta({0.8, -0.6})), b(make_theta({0.8, -0.6}));
    for (std::size_t i = 0; i < steps && identical; ++i) {
      sage_step(a, envs, cfg, rng);
      sam_step(b, envs, cfg.rule, cfg.base);
      identical = a.params == b.params;
    }
  }
  if (!identical) o.pass = false;

  // Duplicate environments: S == 1 and beta == 0 at every step.
  bool beta_zero = true;
  {
    const EnvList dup{envs[0], envs[0], envs[0]};
    SageConfig cfg;
    cfg.gamma = 1.0;
    cfg.rule.rho = 0.05;
    cfg.base = SgdBase{0.05};
    OptimState st(make_theta({0.3, 0.3}));
    for (std::size_t i = 0; i < steps; ++i) beta_zero &= sage_step(st, dup, cfg, rng).beta == 0.0;
  }
  if (!beta_zero) o.pass = false;

  o.detail = "grad rounds per step in [" + std::to_string(min_rounds) + "," + std::to_string(max_rounds) +
             "], gamma=0 trajectory " + (identical ? "identical" : "DIFFERS") + " to SAM over " +
             std::to_string(steps) + " steps, duplicate-env beta " + (beta_zero ? "== 0" : "!= 0");
  return o;
}

// ---------------------------------------------------------------- 8

Outcome oracles() {
  constexpr int kPoints = 50;
  double worst_grad = 0.0, worst_hess = 0.0;
  std::size_t checks = 0;
  auto grad = [&](const Environment& e, const ParamSet& th) {
    worst_grad = std::max(worst_grad, testing::gradient_rel_error(e, th));
    ++checks;
  };
  auto hess = [&](const Environment& e, const ParamSet& th) {
    worst_hess = std::max(worst_hess, testing::hessian_abs_error(e, th));
  };

  for (std::uint64_t t = 0; t < kPoints; ++t) {
    auto eng = Rng(kSeed).split(Purpose::random_test, 8, t).engine();
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    // Quadratic: both counterexample families and a random one.
    std::vector<QuadraticFamily> fams{build_counterexample(10, CounterexampleVariant::flat_misaligned).family,
                                      build_counterexample(10, CounterexampleVariant::aligned_sharp).family};
    {
      const std::size_t d = 4;
      const Matrix g = testing::random_normal_matrix(d, d, eng);
      std::vector<std::vector<double>> b(3, std::vector<double>(d));
      for (auto& v : b)
        for (double& x : v) x = u(eng);
      fams.emplace_back(g.transposed() * g * (1.0 / d) + Matrix::identity(d), b);
    }
    for (const auto& fam : fams) {
      std::vector<double> th(fam.dimension());
      for (double& x : th) x = u(eng);
      for (const auto& e : quadratic_envs(fam)) {
        grad(e, make_theta(th));
        hess(e, make_theta(th));
      }
    }

    // Two-domain Gaussian task.
    const ParamSet gth = make_theta({u(eng), u(eng)});
    for (const auto& e : gaussian_domain_envs()) {
      grad(e, gth);
      hess(e, gth);
    }

    // Toy landscape.
    std::uniform_real_distribution<double> wide(-2.0, 2.0);
    const ParamSet tth = make_theta({wide(eng), wide(eng)});
    for (const auto& e : toy2d_landscape().envs()) grad(e, tth);
  }

  // MLP, with and without biases, at points whose stencil avoids ReLU kinks.
  std::size_t rejected = 0;
  for (bool bias : {true, false}) {
    const MlpProblem p = mlp_problem(kSeed, bias);
    int kept = 0;
    for (std::uint64_t t = 0; kept < kPoints && t < 1000; ++t) {
      auto eng = Rng(kSeed).split(Purpose::random_test, bias ? 81 : 80, t).engine();
      std::normal_distribution<double> n(0.0, 0.5);
      ParamSet th = p.init;
      auto flat = th.flatten();
      for (double& x : flat) x += n(eng);
      th.assign(flat);
      if (!testing::mlp_stencil_is_smooth(p, th)) {
        ++rejected;
        continue;
      }
      ++kept;
      for (const auto& e : p.envs) grad(e, th);
    }
    if (kept < kPoints) return {false, "too few smooth MLP points"};
  }

  Outcome o;
  o.pass = worst_grad <= 1e-5 && worst_hess <= 1e-6;
  o.detail = std::to_string(checks) + " gradient checks, max rel error " + num(worst_grad) +
             "; max Hessian abs error " + num(worst_hess) + "; " + std::to_string(rejected) +
             " MLP points rejected at ReLU kinks";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "excess-risk decomposition exactness", 30, theorem_exactness},
      {2, "counterexample traces", 1, counterexamples},
      {3, "two-domain reference values", 1, motivating},
      {4, "Newton-Schulz vs SVD polar", 2, newton_schulz},
      {5, "sharpness scale invariance", 60, scale_invariance},
      {6, "toy 2-D basin ensemble", 60, toy2d},
      {7, "SAGE step conformance", 5, algorithm_conformance},
      {8, "gradient and Hessian oracles", 10, oracles},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long v = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || v < 1 || v > static_cast<long>(all.size())) {
      std::cerr << "usage: sage_acceptance [1-8 ...]\n";
      return 2;
    }
    selected.push_back(static_cast<int>(v));
  }
  if (selected.empty())
    for (const auto& c : all) selected.push_back(c.id);

  bool ok = true;
  for (int id : selected) {
    const Criterion& c = all[static_cast<std::size_t>(id - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    ok &= pass;
    std::cout << "criterion " << c.id << " " << c.name << ": " << (pass ? "PASS" : "FAIL") << " " << o.detail << " ["
              << num(secs) << "s" << (in_budget ? "" : ", over the " + num(c.budget_seconds) + "s budget") << "]"
              << std::endl;
  }
  return ok ? 0 : 1;
}
