// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/theorylab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <random>
#include <string>
#include <thread>

#include "sage/errors.hpp"
#include "sage/stats.hpp"

namespace sage {

double alignment_term(const SymPD& h, const Matrix& sigma, std::size_t k) {
  if (k < 1) throw InvalidArgument("alignment term needs K >= 1");
  if (sigma.rows() != h.dim() || sigma.cols() != h.dim()) throw ShapeMismatch("Sigma does not match H");
  return trace(pd_solve(h, sigma)) / (2.0 * static_cast<double>(k));
}

double curvature_term(const SymPD& h, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("noise std sigma must be >= 0");
  return sigma * sigma * trace(h.matrix()) / 2.0;
}

std::string to_string(MetaDistribution m) { return m == MetaDistribution::gaussian ? "gaussian" : "uniform_finite"; }
std::string to_string(ThetaSolver s) { return s == ThetaSolver::sgd ? "sgd" : "closed_form"; }

MetaDistribution meta_distribution_from_string(const std::string& name) {
  if (name == "uniform_finite") return MetaDistribution::uniform_finite;
  if (name == "gaussian") return MetaDistribution::gaussian;
  throw InvalidArgument("unknown meta distribution '" + name + "'");
}

ThetaSolver theta_solver_from_string(const std::string& name) {
  if (name == "closed_form") return ThetaSolver::closed_form;
  if (name == "sgd") return ThetaSolver::sgd;
  throw InvalidArgument("unknown theta solver '" + name + "'");
}

void McOptions::validate() const {
  if (k < 1) throw InvalidArgument("K must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be >= 0");
  if (trials < kMinTrials) {
    throw InvalidArgument("trials must be >= " + std::to_string(kMinTrials) + ", got " + std::to_string(trials));
  }
}

bool DecompositionReport::within_three_se() const {
  const double closed = closed_form();
  return std::abs(mc_excess_mean - closed) <= 3.0 * mc_excess_se + 1e-12 * std::max(1.0, std::abs(closed));
}

unsigned threads_from_env() {
  const char* v = std::getenv("SAGE_OPT_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (end == v || *end != '\0' || n == 0) return 1;
  return static_cast<unsigned>(std::min<unsigned long>(n, 256));
}

namespace {

std::vector<double> gd_minimizer(const SymPD& a, std::span<const double> g_hat) {
  const Matrix& m = a.matrix();
  const double lr = 1.0 / frobenius_norm(m);  // lambda_max <= ||A||_F
  const double tol = 1e-13 * std::max(1.0, l2_norm(g_hat));
  std::vector<double> theta(g_hat.size(), 0.0);
  for (int it = 0; it < 1000000; ++it) {
    std::vector<double> g = m * std::span<const double>(theta);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += g_hat[i];
    if (l2_norm(g) <= tol) break;
    for (std::size_t i = 0; i < g.size(); ++i) theta[i] -= lr * g[i];
  }
  return theta;
}

}  // namespace

DecompositionReport mc_excess_risk(const QuadraticFamily& family, const McOptions& opts, const Rng& rng) {
  opts.validate();
  const SymPD& a = family.curvature();
  const std::size_t d = family.dimension();
  const auto& offsets = family.offsets();
  const std::size_t n = offsets.size();

  Matrix sigma_b(d, d);
  for (const auto& b : offsets)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) sigma_b(i, j) += b[i] * b[j];
  sigma_b *= 1.0 / static_cast<double>(n);
  const Matrix chol = opts.meta == MetaDistribution::gaussian ? psd_factor(sigma_b) : Matrix(d, d);

  std::vector<double> excess(opts.trials);
  auto run_trial = [&](std::size_t t) {
    std::vector<double> g_hat(d, 0.0);
    const Rng env_rng = rng.split(Purpose::mc_environments, t);
    if (opts.meta == MetaDistribution::uniform_finite) {
      auto eng = env_rng.engine();
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t e = 0; e < opts.k; ++e) {
        const auto& b = offsets[pick(eng)];
        for (std::size_t i = 0; i < d; ++i) g_hat[i] += b[i];
      }
    } else {
      const std::vector<double> z = env_rng.normals(opts.k * d);
      for (std::size_t e = 0; e < opts.k; ++e) {
        const std::vector<double> b = chol * std::span<const double>(z.data() + e * d, d);
        for (std::size_t i = 0; i < d; ++i) g_hat[i] += b[i];
      }
    }
    for (double& x : g_hat) x /= static_cast<double>(opts.k);

    std::vector<double> theta;
    if (opts.solver == ThetaSolver::closed_form) {
      std::vector<double> neg(d);
      for (std::size_t i = 0; i < d; ++i) neg[i] = -g_hat[i];
      theta = pd_solve(a, neg);
    } else {
      theta = gd_minimizer(a, g_hat);
    }
    if (opts.sigma > 0.0) {
      const auto xi = rng.split(Purpose::mc_parameter_noise, t).normals(d);
      for (std::size_t i = 0; i < d; ++i) theta[i] += opts.sigma * xi[i];
    }
    excess[t] = family.population_risk(theta);  // R(theta*) = 0
  };

  const unsigned threads = std::max(1u, opts.threads == 0 ? threads_from_env() : opts.threads);
  if (threads == 1) {
    for (std::size_t t = 0; t < opts.trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < opts.trials; t += threads) run_trial(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  DecompositionReport r;
  r.k = opts.k;
  r.sigma = opts.sigma;
  r.trials = opts.trials;
  r.alignment_term = alignment_term(a, sigma_b, opts.k);
  r.curvature_term = curvature_term(a, opts.sigma);
  const double count = static_cast<double>(opts.trials);
  r.mc_excess_mean = pairwise_sum(excess) / count;
  std::vector<double> sq(opts.trials);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const double dv = excess[t] - r.mc_excess_mean;
    sq[t] = dv * dv;
  }
  r.mc_excess_se = std::sqrt(pairwise_sum(sq) / (count - 1.0) / count);
  return r;
}

// ------------------------------------------------------------ counterexample

std::string to_string(CounterexampleVariant v) {
  return v == CounterexampleVariant::flat_misaligned ? "flat_misaligned" : "aligned_sharp";
}

CounterexampleVariant counterexample_variant_from_string(const std::string& name) {
  if (name == "flat_misaligned" || name == "i") return CounterexampleVariant::flat_misaligned;
  if (name == "aligned_sharp" || name == "ii") return CounterexampleVariant::aligned_sharp;
  throw InvalidArgument("unknown counterexample variant '" + name + "'");
}

bool CounterexampleInstance::satisfies_bounds(double rel) const {
  if (variant == CounterexampleVariant::flat_misaligned) {
    return tr_h <= (1.0 / m) * (1.0 + rel) && tr_hinv_sigma >= m * (1.0 - rel);
  }
  return tr_hinv_sigma <= (1.0 / m) * (1.0 + rel) && tr_h >= m * (1.0 - rel);
}

CounterexampleInstance build_counterexample(double m, CounterexampleVariant variant) {
  if (!(m > 1.0) || !std::isfinite(m)) throw InvalidArgument("counterexample needs M > 1");
  const bool flat = variant == CounterexampleVariant::flat_misaligned;
  const double lambda = flat ? 1.0 / (2.0 * m) : m / 2.0;
  const std::vector<double> b = flat ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0 / std::sqrt(2.0), 0.0};
  const std::vector<double> nb{-b[0], -b[1]};
  QuadraticFamily family(Matrix::identity(2) * lambda, {b, nb});

  const EnvList envs = quadratic_envs(family);
  const EnvStats st = env_stats(envs, make_theta({0.0, 0.0}));
  const SymPD h(*st.h_bar);
  const double tr_h = trace(h.matrix());
  const double tr_hs = trace(pd_solve(h, st.sigma_g));
  return CounterexampleInstance{variant, m, std::move(family), tr_h, tr_hs};
}

// ---------------------------------------------------------------- decoupling

DecouplingReport decoupling_check(const QuadraticFamily& family, const Rng& rng, std::size_t replacements) {
  const std::size_t d = family.dimension();
  const std::size_t n = family.size();
  const ParamSet origin = make_theta(std::vector<double>(d, 0.0));
  const Matrix& a = family.curvature().matrix();
  const Matrix sigma0 = env_stats(quadratic_envs(family), origin).sigma_g;

  auto random_offsets = [&](std::size_t r) {
    const auto z = rng.split(Purpose::random_test, r, 0).normals(n * d);
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (std::size_t e = 0; e < n; ++e)
      for (std::size_t i = 0; i < d; ++i) out[e][i] = z[e * d + i];
    return out;
  };
  auto random_curvature = [&](std::size_t r) {
    const auto z = rng.split(Purpose::random_test, r, 1).normals(d * d);
    const Matrix g(d, d, z);
    return transpose_times(g, g) + Matrix::identity(d);
  };

  DecouplingReport rep;
  rep.replacements = replacements;
  rep.h_bar_fixed_under_offset_swaps = true;
  rep.sigma_fixed_under_curvature_swaps = true;
  rep.both_swapped_as_predicted = true;
  for (std::size_t r = 0; r < replacements; ++r) {
    const auto new_b = random_offsets(r);
    const Matrix new_a = random_curvature(r);

    const QuadraticFamily swap_b(a, new_b);
    const EnvStats sb = env_stats(quadratic_envs(swap_b), origin);
    rep.max_h_deviation = std::max(rep.max_h_deviation, max_abs_diff(*sb.h_bar, a));
    rep.h_bar_fixed_under_offset_swaps &= *sb.h_bar == a;

    const QuadraticFamily swap_a(new_a, family.offsets());
    const EnvStats sa = env_stats(quadratic_envs(swap_a), origin);
    rep.max_sigma_deviation = std::max(rep.max_sigma_deviation, max_abs_diff(sa.sigma_g, sigma0));
    rep.sigma_fixed_under_curvature_swaps &= sa.sigma_g == sigma0;

    // Both swapped: H_bar follows A alone, Sigma_g follows b alone.
    const QuadraticFamily both(new_a, new_b);
    const EnvStats s2 = env_stats(quadratic_envs(both), origin);
    rep.both_swapped_as_predicted &= *s2.h_bar == both.curvature().matrix() && s2.sigma_g == sb.sigma_g &&
                                     !(sb.sigma_g == sigma0) && !(new_a == a);
  }
  return rep;
}

// ---------------------------------------------------------- motivating case

namespace {

std::array<double, 2> to_array2(std::span<const double> v) { return {v[0], v[1]}; }

}  // namespace

MotivatingReport motivating_example_report(const GaussianDomainSpec& spec, double delta) {
  const EnvList envs = gaussian_domain_envs(spec);
  const ParamSet origin = make_theta({0.0, 0.0});
  const EnvStats st0 = env_stats(envs, origin);

  MotivatingReport rep;
  rep.h_bar = *st0.h_bar;
  const SymPD h_bar(rep.h_bar);
  const std::vector<double> neg_g{-st0.g_bar[0], -st0.g_bar[1]};
  rep.theta_star = to_array2(pd_solve(h_bar, neg_g));
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& g = st0.env_grads[k];
    rep.grads_at_origin[k] = {g[0], g[1]};
    const SymPD hk(envs[k].hessian(origin));
    rep.domain_optima[k] = to_array2(pd_solve(hk, std::vector<double>{-g[0], -g[1]}));
  }
  rep.agreement_at_origin = st0.agreement;

  const ParamSet star = make_theta({rep.theta_star[0], rep.theta_star[1]});
  const EnvStats st = env_stats(envs, star);
  rep.sigma_g_star = st.sigma_g;
  rep.tr_hinv_sigma = trace(pd_solve(h_bar, st.sigma_g));

  rep.delta = delta;
  const ParamSet moved = make_theta({rep.theta_star[0] + delta, rep.theta_star[1]});
  rep.loss_increase = aggregate_loss(envs, moved) - aggregate_loss(envs, star);
  rep.loss_increase_quadratic = 0.5 * rep.h_bar(0, 0) * delta * delta;
  return rep;
}

// ------------------------------------------------------- remainder (cubic)

namespace {

// Newton's method on w_1 L_1 + w_2 L_2 from `start`.
std::vector<double> newton_minimize(const EnvList& envs, std::array<double, 2> w, std::vector<double> theta) {
  for (int it = 0; it < 100; ++it) {
    const ParamSet p = make_theta(theta);
    std::vector<double> g(2, 0.0);
    Matrix h(2, 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto gk = envs[k].grad(p).flatten();
      for (std::size_t i = 0; i < 2; ++i) g[i] += w[k] * gk[i];
      h += envs[k].hessian(p) * w[k];
    }
    if (l2_norm(g) <= 1e-15) break;
    const auto step = pd_solve(SymPD(h), g);
    theta[0] -= step[0];
    theta[1] -= step[1];
  }
  return theta;
}

}  // namespace

RemainderReport remainder_spot_check(double cubic, const std::vector<std::size_t>& ks) {
  const EnvList envs = gaussian_domain_envs({}, cubic);
  const std::vector<double> star = newton_minimize(envs, {0.5, 0.5}, {0.1, 0.0});
  const ParamSet star_p = make_theta(star);
  const double r_star = aggregate_loss(envs, star_p);
  const EnvStats st = env_stats(envs, star_p);
  const SymPD h_bar(*st.h_bar);

  RemainderReport rep;
  rep.cubic = cubic;
  for (std::size_t k : ks) {
    if (k < 1) throw InvalidArgument("remainder check needs K >= 1");
    const double kd = static_cast<double>(k);
    std::vector<double> terms;
    for (std::size_t j = 0; j <= k; ++j) {
      const double jd = static_cast<double>(j);
      const double log_p = std::lgamma(kd + 1) - std::lgamma(jd + 1) - std::lgamma(kd - jd + 1) - kd * std::log(2.0);
      const auto theta = newton_minimize(envs, {jd / kd, 1.0 - jd / kd}, star);
      terms.push_back(std::exp(log_p) * (aggregate_loss(envs, make_theta(theta)) - r_star));
    }
    RemainderRow row;
    row.k = k;
    row.expected_excess = pairwise_sum(terms);
    row.closed_form = alignment_term(h_bar, st.sigma_g, k);
    row.remainder = std::abs(row.expected_excess - row.closed_form);
    row.scaled = row.remainder * std::pow(kd, 1.5);
    rep.rows.push_back(row);
  }
  rep.consistent = !rep.rows.empty();
  for (const auto& row : rep.rows) rep.consistent &= row.scaled <= 3.0 * rep.rows.front().scaled;
  return rep;
}

}  // namespace sage
