// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "sage/errors.hpp"
#include "sage/linalg.hpp"
#include "sage/optim.hpp"
#include "sage/problems.hpp"
#include "sage/stats.hpp"
#include "sage/theorylab.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

sage::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw sage::ShapeMismatch("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return sage::Matrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const sage::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<std::vector<double>> to_rows(const Array& a) {
  if (a.ndim() != 2) throw sage::ShapeMismatch("expected a 2-D array of shape (K, d)");
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* p = a.data(static_cast<py::ssize_t>(i), 0);
    rows[i].assign(p, p + a.shape(1));
  }
  return rows;
}

sage::EnvList problem_envs(const std::string& name) {
  if (name == "gaussian") return sage::gaussian_domain_envs();
  if (name == "toy2d") return sage::toy2d_landscape().envs();
  throw sage::InvalidArgument("problem must be 'gaussian' or 'toy2d', got '" + name + "'");
}

py::dict run_sage(const std::string& problem, std::vector<double> theta0, std::size_t steps, double gamma,
                  double rho, double lr, const std::string& perturbation, std::uint64_t seed) {
  const sage::EnvList envs = problem_envs(problem);
  sage::SageConfig cfg;
  cfg.gamma = gamma;
  cfg.rule.kind = sage::perturbation_kind_from_string(perturbation);
  cfg.rule.rho = rho;
  cfg.base = sage::SgdBase{lr};
  cfg.validate(envs.size());
  const sage::Rng rng(seed);
  sage::OptimState state(sage::make_theta(theta0));
  std::vector<double> losses, betas, agreements;
  {
    py::gil_scoped_release release;
    for (std::size_t i = 0; i < steps; ++i) {
      const sage::StepReport r = sage::sage_step(state, envs, cfg, rng);
      losses.push_back(r.aggregate_loss);
      betas.push_back(r.beta);
      agreements.push_back(r.agreement);
    }
  }
  py::dict out;
  out["theta"] = state.params.flatten();
  out["loss"] = losses;
  out["beta"] = betas;
  out["agreement"] = agreements;
  return out;
}

}  // namespace

PYBIND11_MODULE(_sage, m) {
  m.doc() = "Bindings for the sage-opt core library.";
  m.attr("__version__") = SAGE_VERSION;

  auto base = py::register_exception<sage::Error>(m, "SageError", PyExc_RuntimeError);
  py::register_exception<sage::InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<sage::ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  py::register_exception<sage::ZeroGradient>(m, "ZeroGradient", base.ptr());
  py::register_exception<sage::NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<sage::NonFiniteLoss>(m, "NonFiniteLoss", base.ptr());
  py::register_exception<sage::TooFewEnvironments>(m, "TooFewEnvironments", base.ptr());
  py::register_exception<sage::DimensionTooLarge>(m, "DimensionTooLarge", base.ptr());

  m.def(
      "newton_schulz_polar", [](const Array& g, int iters) { return to_array(sage::newton_schulz_polar(to_matrix(g), iters)); },
      py::arg("g"), py::arg("iterations") = 5);
  m.def(
      "svd_polar", [](const Array& g) { return to_array(sage::svd_polar_oracle(to_matrix(g))); }, py::arg("g"));

  m.def(
      "gradient_agreement", [](const Array& grads) { return sage::gradient_agreement(to_rows(grads)); },
      py::arg("grads"), "Mean pairwise cosine similarity of the rows of a (K, d) array.");
  m.def("noise_scale", &sage::noise_scale, py::arg("agreement"), py::arg("gamma"));

  m.def(
      "alignment_term",
      [](const Array& h, const Array& sigma, std::size_t k) {
        return sage::alignment_term(sage::SymPD(to_matrix(h)), to_matrix(sigma), k);
      },
      py::arg("h"), py::arg("sigma"), py::arg("k"));
  m.def(
      "curvature_term", [](const Array& h, double sigma) { return sage::curvature_term(sage::SymPD(to_matrix(h)), sigma); },
      py::arg("h"), py::arg("sigma"));

  m.def(
      "counterexample",
      [](double m_scale, const std::string& variant) {
        const auto c = sage::build_counterexample(m_scale, sage::counterexample_variant_from_string(variant));
        py::dict out;
        out["variant"] = sage::to_string(c.variant);
        out["m"] = c.m;
        out["tr_h"] = c.tr_h;
        out["tr_hinv_sigma"] = c.tr_hinv_sigma;
        out["satisfies_bounds"] = c.satisfies_bounds();
        return out;
      },
      py::arg("m"), py::arg("variant") = "flat_misaligned");

  m.def("motivating_report", [] {
    const sage::MotivatingReport r = sage::motivating_example_report();
    py::dict out;
    out["h_bar"] = to_array(r.h_bar);
    out["theta_star"] = r.theta_star;
    out["domain_optima"] = r.domain_optima;
    out["grads_at_origin"] = r.grads_at_origin;
    out["sigma_g_star"] = to_array(r.sigma_g_star);
    out["tr_hinv_sigma"] = r.tr_hinv_sigma;
    out["agreement_at_origin"] = r.agreement_at_origin;
    out["loss_increase"] = r.loss_increase;
    return out;
  });

  m.def(
      "mc_excess_risk",
      [](double m_scale, const std::string& variant, std::size_t k, double sigma, std::size_t trials,
         std::uint64_t seed, unsigned threads) {
        sage::McOptions o;
        o.k = k;
        o.sigma = sigma;
        o.trials = trials;
        o.threads = threads;
        const auto family = sage::build_counterexample(m_scale, sage::counterexample_variant_from_string(variant)).family;
        sage::DecompositionReport r;
        {
          py::gil_scoped_release release;
          r = sage::mc_excess_risk(family, o, sage::Rng(seed));
        }
        py::dict out;
        out["alignment_term"] = r.alignment_term;
        out["curvature_term"] = r.curvature_term;
        out["closed_form"] = r.closed_form();
        out["mean"] = r.mc_excess_mean;
        out["se"] = r.mc_excess_se;
        out["trials"] = r.trials;
        out["within_three_se"] = r.within_three_se();
        return out;
      },
      py::arg("m") = 10.0, py::arg("variant") = "flat_misaligned", py::arg("k") = 1, py::arg("sigma") = 0.0,
      py::arg("trials") = 10000, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("run_sage", &run_sage, py::arg("problem"), py::arg("theta0"), py::arg("steps") = 100, py::arg("gamma") = 0.1,
        py::arg("rho") = 0.05, py::arg("lr") = 0.05, py::arg("perturbation") = "spectral", py::arg("seed") = 0);
}
