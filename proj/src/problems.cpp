// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/problems.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "sage/errors.hpp"
#include "sage/rng.hpp"

namespace sage {

double aggregate_loss(std::span<const Environment> envs, const ParamSet& theta) {
  if (envs.empty()) throw TooFewEnvironments("aggregate loss over zero environments");
  double acc = 0.0;
  for (const auto& e : envs) acc += e.loss(theta);
  return acc / static_cast<double>(envs.size());
}

namespace {

const std::vector<double>& theta_values(const ParamSet& p, std::size_t dim) {
  if (p.tensor_count() != 1 || p[0].size() != dim) {
    throw ShapeMismatch("expected a single " + std::to_string(dim) + "-vector parameter");
  }
  return p[0].values;
}

}  // namespace

// ---------------------------------------------------------------- quadratic

QuadraticFamily::QuadraticFamily(Matrix curvature, std::vector<std::vector<double>> offsets)
    : curvature_(std::move(curvature)), offsets_(std::move(offsets)) {
  if (offsets_.empty()) throw InvalidArgument("quadratic family needs at least one offset");
  const std::size_t d = curvature_.dim();
  std::vector<double> mean(d, 0.0);
  for (const auto& b : offsets_) {
    if (b.size() != d) throw InvalidArgument("offset dimension does not match curvature");
    if (!all_finite(b)) throw InvalidArgument("offsets must be finite");
    for (std::size_t i = 0; i < d; ++i) mean[i] += b[i];
  }
  for (double& m : mean) m /= static_cast<double>(offsets_.size());
  for (auto& b : offsets_)
    for (std::size_t i = 0; i < d; ++i) b[i] -= mean[i];
}

double QuadraticFamily::population_risk(std::span<const double> theta) const {
  const std::vector<double> at = curvature_.matrix() * theta;
  return 0.5 * dot(theta, at);
}

Environment quadratic_env(const SymPD& curvature, std::vector<double> offset, std::string id) {
  const Matrix a = curvature.matrix();
  const std::size_t d = a.rows();
  Environment env;
  env.id = std::move(id);
  env.loss = [a, offset, d](const ParamSet& p) {
    const auto& th = theta_values(p, d);
    const std::vector<double> at = a * std::span<const double>(th);
    return 0.5 * dot(th, at) + dot(offset, th);
  };
  env.evaluate = [a, offset, d](const ParamSet& p) {
    const auto& th = theta_values(p, d);
    std::vector<double> g = a * std::span<const double>(th);
    const double loss = 0.5 * dot(th, g) + dot(offset, th);
    for (std::size_t i = 0; i < d; ++i) g[i] += offset[i];
    return Evaluation{loss, p.unflatten(g)};
  };
  env.hessian = [a](const ParamSet&) { return a; };
  return env;
}

EnvList quadratic_envs(const QuadraticFamily& family) {
  EnvList envs;
  envs.reserve(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) {
    envs.push_back(quadratic_env(family.curvature(), family.offsets()[k], "quadratic_" + std::to_string(k)));
  }
  return envs;
}

// ---------------------------------------------------- Gaussian two domains

void GaussianDomainSpec::validate() const {
  if (!(var_inv > 0.0) || !(var_spur > 0.0)) throw InvalidArgument("feature variances must be positive");
  if (!std::isfinite(mu_inv) || !std::isfinite(mu_spur)) throw InvalidArgument("feature means must be finite");
}

Matrix gaussian_domain_hessian(const GaussianDomainSpec& spec, std::size_t domain) {
  const double c = spec.spurious_mean(domain);
  return Matrix::from_rows({{spec.var_inv + spec.mu_inv * spec.mu_inv, spec.mu_inv * c},
                            {spec.mu_inv * c, spec.var_spur + spec.mu_spur * spec.mu_spur}});
}

std::array<double, 2> gaussian_domain_offset(const GaussianDomainSpec& spec, std::size_t domain) {
  return {spec.mu_inv, spec.spurious_mean(domain)};
}

EnvList gaussian_domain_envs(const GaussianDomainSpec& spec, double cubic_inv) {
  spec.validate();
  EnvList envs;
  for (std::size_t k = 0; k < 2; ++k) {
    const double mi = spec.mu_inv;
    const double ck = spec.spurious_mean(k);
    const double hii = spec.var_inv + spec.mu_inv * spec.mu_inv;
    const double hss = spec.var_spur + spec.mu_spur * spec.mu_spur;
    const double his = mi * ck;
    Environment env;
    env.id = "domain_" + std::to_string(k + 1);
    auto loss = [=](double ti, double ts) {
      return 0.5 - ti * mi - ts * ck + 0.5 * ti * ti * hii + 0.5 * ts * ts * hss + ti * ts * his +
             cubic_inv * ti * ti * ti;
    };
    env.loss = [=](const ParamSet& p) {
      const auto& th = theta_values(p, 2);
      return loss(th[0], th[1]);
    };
    env.evaluate = [=](const ParamSet& p) {
      const auto& th = theta_values(p, 2);
      const double ti = th[0], ts = th[1];
      const std::vector<double> g{-mi + ti * hii + ts * his + 3.0 * cubic_inv * ti * ti,
                                  -ck + ts * hss + ti * his};
      return Evaluation{loss(ti, ts), p.unflatten(g)};
    };
    env.hessian = [=](const ParamSet& p) {
      const auto& th = theta_values(p, 2);
      return Matrix::from_rows({{hii + 6.0 * cubic_inv * th[0], his}, {his, hss}});
    };
    envs.push_back(std::move(env));
  }
  return envs;
}

// --------------------------------------------------------------------- MLP

CirclesDataset make_circles(std::uint64_t seed, const MlpOptions& opts) {
  auto eng = Rng(seed).split(Purpose::dataset).engine();
  std::normal_distribution<double> noise(0.0, opts.radial_noise);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  CirclesDataset data;
  const std::size_t per_class = opts.points / 2;
  for (int cls = 0; cls < 2; ++cls) {
    const double radius = cls == 0 ? opts.inner_radius : opts.outer_radius;
    for (std::size_t i = 0; i < per_class; ++i) {
      const double r = radius + noise(eng);
      const double a = angle(eng);
      data.x.push_back({r * std::cos(a), r * std::sin(a)});
      data.label.push_back(cls);
    }
  }
  return data;
}

namespace {

struct MlpShard {
  std::vector<std::array<double, 2>> x;
  std::vector<int> label;
};

struct MlpView {
  const std::vector<double>& w1;
  const std::vector<double>* b1;
  const std::vector<double>& w2;
  const std::vector<double>* b2;
};

MlpView view_of(const ParamSet& p, bool with_bias) {
  if (p.tensor_count() != (with_bias ? 4u : 2u)) throw ShapeMismatch("MLP parameter layout");
  if (with_bias) return {p[0].values, &p[1].values, p[2].values, &p[3].values};
  return {p[0].values, nullptr, p[1].values, nullptr};
}

// Loss and (optionally) gradient of 1/2 ||W2 relu(W1 x + b1) + b2 - onehot||^2
// averaged over the shard.
double mlp_forward_backward(const MlpShard& shard, const ParamSet& p, bool with_bias, std::size_t hidden,
                            ParamSet* grad) {
  const MlpView v = view_of(p, with_bias);
  const std::size_t h = hidden;
  const double inv_n = 1.0 / static_cast<double>(shard.x.size());
  std::vector<double> z(h), a(h);
  std::vector<double>* gw1 = nullptr;
  std::vector<double>* gb1 = nullptr;
  std::vector<double>* gw2 = nullptr;
  std::vector<double>* gb2 = nullptr;
  if (grad) {
    *grad = p.zeros_like();
    gw1 = &(*grad)[0].values;
    gw2 = &(*grad)[with_bias ? 2 : 1].values;
    if (with_bias) {
      gb1 = &(*grad)[1].values;
      gb2 = &(*grad)[3].values;
    }
  }
  double total = 0.0;
  for (std::size_t n = 0; n < shard.x.size(); ++n) {
    const auto& x = shard.x[n];
    for (std::size_t j = 0; j < h; ++j) {
      double s = v.w1[2 * j] * x[0] + v.w1[2 * j + 1] * x[1];
      if (v.b1) s += (*v.b1)[j];
      z[j] = s;
      a[j] = s > 0.0 ? s : 0.0;
    }
    double d[2];
    for (std::size_t o = 0; o < 2; ++o) {
      double s = v.b2 ? (*v.b2)[o] : 0.0;
      for (std::size_t j = 0; j < h; ++j) s += v.w2[o * h + j] * a[j];
      d[o] = s - (shard.label[n] == static_cast<int>(o) ? 1.0 : 0.0);
    }
    total += 0.5 * (d[0] * d[0] + d[1] * d[1]);
    if (!grad) continue;
    const double d0 = d[0] * inv_n, d1 = d[1] * inv_n;
    for (std::size_t j = 0; j < h; ++j) {
      (*gw2)[j] += d0 * a[j];
      (*gw2)[h + j] += d1 * a[j];
      if (z[j] > 0.0) {
        const double dz = v.w2[j] * d0 + v.w2[h + j] * d1;
        (*gw1)[2 * j] += dz * x[0];
        (*gw1)[2 * j + 1] += dz * x[1];
        if (gb1) (*gb1)[j] += dz;
      }
    }
    if (gb2) {
      (*gb2)[0] += d0;
      (*gb2)[1] += d1;
    }
  }
  return total * inv_n;
}

}  // namespace

MlpProblem mlp_problem(std::uint64_t seed, bool with_bias, const MlpOptions& opts) {
  if (opts.environments < 1 || opts.points < 2 * opts.environments || opts.hidden == 0) {
    throw InvalidArgument("MLP options leave an empty shard or layer");
  }
  MlpProblem prob;
  prob.with_bias = with_bias;
  prob.data = make_circles(seed, opts);
  const std::size_t h = opts.hidden;

  auto eng = Rng(seed).split(Purpose::init).engine();
  std::normal_distribution<double> first(0.0, opts.first_layer_init_std);
  std::normal_distribution<double> second(0.0, 1.0 / std::sqrt(static_cast<double>(h)));
  std::vector<double> w1(2 * h), w2(2 * h);
  for (double& w : w1) w = first(eng);
  for (double& w : w2) w = second(eng);
  prob.init.add("w1", {h, 2}, std::move(w1));
  if (with_bias) prob.init.add_vector("b1", std::vector<double>(h, 0.0));
  prob.init.add("w2", {2, h}, std::move(w2));
  if (with_bias) prob.init.add_vector("b2", std::vector<double>(2, 0.0));

  // Class-balanced shards: within each class, points are dealt round-robin.
  std::vector<MlpShard> shards(opts.environments);
  std::size_t seen[2] = {0, 0};
  for (std::size_t i = 0; i < prob.data.x.size(); ++i) {
    const int cls = prob.data.label[i];
    auto& shard = shards[seen[cls]++ % opts.environments];
    shard.x.push_back(prob.data.x[i]);
    shard.label.push_back(cls);
  }
  for (std::size_t k = 0; k < shards.size(); ++k) {
    auto shard = std::make_shared<const MlpShard>(std::move(shards[k]));
    Environment env;
    env.id = "shard_" + std::to_string(k);
    env.loss = [shard, with_bias, h](const ParamSet& p) {
      return mlp_forward_backward(*shard, p, with_bias, h, nullptr);
    };
    env.evaluate = [shard, with_bias, h](const ParamSet& p) {
      Evaluation e;
      e.loss = mlp_forward_backward(*shard, p, with_bias, h, &e.grad);
      return e;
    };
    prob.envs.push_back(std::move(env));
  }
  return prob;
}

ParamSet rescale_mlp(const ParamSet& params, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("rescale factor must be positive");
  ParamSet out = params;
  for (double& w : out.at("w1").values) w *= alpha;
  if (auto i = out.index_of("b1")) {
    for (double& b : out[*i].values) b *= alpha;
  }
  for (double& w : out.at("w2").values) w /= alpha;
  return out;
}

// ------------------------------------------------------------------- toy 2D

namespace {

// Frozen after a one-time search over well depths and widths; the
// properties that matter are checked by tests, not these digits.
constexpr double kWellDepthA = 1.3;
constexpr double kWellWidthA = 0.6;
constexpr double kWellSplitA = 0.45;
constexpr double kWellDepthB = 1.0;
constexpr double kWellWidthB = 0.35;
constexpr std::array<double, 2> kCenterA{-1.0, 0.0};
constexpr std::array<double, 2> kCenterB{1.0, 0.0};
// Aggregate minima, refined by Newton's method from the well centres.
constexpr std::array<double, 2> kMinimumA{-0.9645514687833797, 0.0};
constexpr std::array<double, 2> kMinimumB{0.9851363836095385, 0.0};

}  // namespace

Toy2DLandscape::Toy2DLandscape() : minimum_a_(kMinimumA), minimum_b_(kMinimumB) {
  for (std::size_t k = 0; k < 2; ++k) {
    const double sign = k == 0 ? 1.0 : -1.0;
    wells_[k][0] = Toy2DWell{{kCenterA[0], kCenterA[1] + sign * kWellSplitA}, kWellDepthA, kWellWidthA};
    wells_[k][1] = Toy2DWell{kCenterB, kWellDepthB, kWellWidthB};
  }
  for (std::size_t k = 0; k < 2; ++k) {
    Environment env;
    env.id = "toy_domain_" + std::to_string(k + 1);
    env.loss = [this, k](const ParamSet& p) {
      const auto& th = theta_values(p, 2);
      return domain_loss(k, {th[0], th[1]});
    };
    env.evaluate = [this, k](const ParamSet& p) {
      const auto& th = theta_values(p, 2);
      const auto g = domain_grad(k, {th[0], th[1]});
      return Evaluation{domain_loss(k, {th[0], th[1]}), p.unflatten(g)};
    };
    env.hessian = [this, k](const ParamSet& p) {
      const auto& th = theta_values(p, 2);
      Matrix hess = Matrix::identity(2) * (2.0 * kConfinement);
      for (const auto& w : wells_[k]) {
        const double rx = th[0] - w.center[0], ry = th[1] - w.center[1];
        const double w2 = w.width * w.width;
        const double e = w.depth * std::exp(-(rx * rx + ry * ry) / (2.0 * w2));
        hess(0, 0) += e * (1.0 / w2 - rx * rx / (w2 * w2));
        hess(1, 1) += e * (1.0 / w2 - ry * ry / (w2 * w2));
        hess(0, 1) -= e * rx * ry / (w2 * w2);
      }
      hess(1, 0) = hess(0, 1);
      return hess;
    };
    envs_.push_back(std::move(env));
  }
}

double Toy2DLandscape::domain_loss(std::size_t domain, std::array<double, 2> p) const {
  double l = kConfinement * (p[0] * p[0] + p[1] * p[1]);
  for (const auto& w : wells_.at(domain)) {
    const double rx = p[0] - w.center[0], ry = p[1] - w.center[1];
    l -= w.depth * std::exp(-(rx * rx + ry * ry) / (2.0 * w.width * w.width));
  }
  return l;
}

std::array<double, 2> Toy2DLandscape::domain_grad(std::size_t domain, std::array<double, 2> p) const {
  std::array<double, 2> g{2.0 * kConfinement * p[0], 2.0 * kConfinement * p[1]};
  for (const auto& w : wells_.at(domain)) {
    const double rx = p[0] - w.center[0], ry = p[1] - w.center[1];
    const double w2 = w.width * w.width;
    const double e = w.depth * std::exp(-(rx * rx + ry * ry) / (2.0 * w2)) / w2;
    g[0] += e * rx;
    g[1] += e * ry;
  }
  return g;
}

double Toy2DLandscape::aggregate_loss(std::array<double, 2> p) const {
  return 0.5 * (domain_loss(0, p) + domain_loss(1, p));
}

std::array<double, 2> Toy2DLandscape::aggregate_grad(std::array<double, 2> p) const {
  const auto g0 = domain_grad(0, p);
  const auto g1 = domain_grad(1, p);
  return {0.5 * (g0[0] + g1[0]), 0.5 * (g0[1] + g1[1])};
}

double Toy2DLandscape::agreement(std::array<double, 2> p) const {
  const auto g0 = domain_grad(0, p);
  const auto g1 = domain_grad(1, p);
  const double n0 = g0[0] * g0[0] + g0[1] * g0[1];
  const double n1 = g1[0] * g1[0] + g1[1] * g1[1];
  if (n0 == 0.0 || n1 == 0.0) return 0.0;
  return (g0[0] * g1[0] + g0[1] * g1[1]) / std::sqrt(n0 * n1);
}

int Toy2DLandscape::classify(std::array<double, 2> p) const {
  const double da = std::hypot(p[0] - minimum_a_[0], p[1] - minimum_a_[1]);
  const double db = std::hypot(p[0] - minimum_b_[0], p[1] - minimum_b_[1]);
  return db < da ? 1 : 0;
}

const Toy2DLandscape& toy2d_landscape() {
  static const Toy2DLandscape landscape;
  return landscape;
}

}  // namespace sage
