// Python bindings for the main scalar-returning operations plus the full
// experiment driver (run_subcommand mirrors the CLI contract).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fphi/counting.hpp"
#include "fphi/experiments.hpp"
#include "fphi/gibbs.hpp"
#include "fphi/lattice.hpp"
#include "fphi/stats.hpp"
#include "fphi/universality.hpp"
#include "fphi/version.hpp"
#include "fphi/wick.hpp"

namespace py = pybind11;
using namespace fphi;

namespace {

py::dict report_to_dict(const BoundReport& r) {
  py::dict d;
  d["observed"] = r.observed_sup_count;
  d["bound"] = r.bound_value;
  d["ratio"] = r.ratio;
  d["zeta"] = r.sup_zeta;
  d["weighted"] = r.weighted_sum;
  return d;
}

} // namespace

PYBIND11_MODULE(pyfphi, m) {
  m.doc() =
      "Pseudo-spectral laboratory for the fractional-dispersion quartic "
      "field on the 3-torus";
  m.attr("__version__") = version_string;
  m.attr("torus_volume") = torus_volume;

  // lattice / symbols
  m.def("next_friendly", &next_friendly, py::arg("x"),
        "smallest 2,3,5-smooth integer >= x");
  m.def(
      "jb2", [](int n1, int n2, int n3) { return jb2(n1, n2, n3); },
      "1 + |n|^2");
  m.def(
      "bracket_symbol",
      [](std::array<int, 3> n, double alpha) {
        return bracket_symbol(n, alpha);
      },
      py::arg("n"), py::arg("alpha"), "sqrt(<n>^{2 alpha} - 1/4)");
  m.def("ball_symbol_sum", &ball_symbol_sum, py::arg("n_cut"),
        py::arg("expo"), "sum_{|n|<=N} <n>^{expo}");

  // wick
  m.def("hermite", &hermite, py::arg("k"), py::arg("x"), py::arg("sigma"));
  m.def("sigma_n", &sigma_N, py::arg("alpha"), py::arg("n_cut"));
  m.def("quad_conv_sum", &quad_conv_sum, py::arg("alpha"), py::arg("n_cut"));
  m.def("alpha_n", &alpha_N, py::arg("alpha"), py::arg("n_cut"));
  m.def(
      "potential_rn_variance",
      [](double alpha, int n_cut) {
        WickTable t(alpha, n_cut, true);
        return potential_RN_variance(t);
      },
      py::arg("alpha"), py::arg("n_cut"),
      "exact Gaussian variance of the quartic integral");

  // gibbs scalars
  m.def(
      "estimate_logz",
      [](double alpha, int n_cut, int n_samples, std::uint64_t seed) {
        WickTable t(alpha, n_cut, true);
        RngStream rng(seed, 0);
        LogZEstimate z = estimate_logZ_importance(t, n_samples, rng);
        return py::make_tuple(z.logz, z.se, z.ess);
      },
      py::arg("alpha"), py::arg("n_cut"), py::arg("n_samples"),
      py::arg("seed") = 1, "(log Z, bootstrap se, effective sample size)");
  m.def("singularity_a", &singularity_A, py::arg("alpha"), py::arg("n_cut"));
  m.def("singularity_b", &singularity_B, py::arg("alpha"), py::arg("n_cut"));

  // universality
  m.def("continuum_sigma", &continuum_sigma, py::arg("alpha"));
  m.def(
      "averaged_coeffs",
      [](std::vector<double> a, double sigma) {
        return averaged_coeffs(MicroPotential{std::move(a)}, sigma);
      },
      py::arg("coeffs"), py::arg("sigma"));
  m.def(
      "averaged_coeffs_quadrature",
      [](std::vector<double> a, double sigma, int n_nodes) {
        return averaged_coeffs_quadrature(MicroPotential{std::move(a)}, sigma,
                                          n_nodes);
      },
      py::arg("coeffs"), py::arg("sigma"), py::arg("n_nodes") = 32);
  m.def(
      "renorm_coeffs_n",
      [](std::vector<double> a, double alpha, int n_cut) {
        RenormCoeffsN rc =
            renorm_coeffs_N(MicroPotential{std::move(a)}, alpha, n_cut);
        return py::make_tuple(rc.sigma_tilde, rc.abar_n);
      },
      py::arg("coeffs"), py::arg("alpha"), py::arg("n_cut"));
  m.def(
      "kappa_fit",
      [](std::vector<double> a, double alpha, std::vector<int> ns) {
        KappaFit kf = kappa_fit(MicroPotential{std::move(a)}, alpha, ns);
        return py::make_tuple(kf.kappa, kf.stderr_);
      },
      py::arg("coeffs"), py::arg("alpha"), py::arg("n_list"));
  m.def(
      "check_criticality_positivity",
      [](std::vector<double> a, double sigma) {
        CriticalityReport r =
            check_criticality_positivity(MicroPotential{std::move(a)}, sigma);
        return py::make_tuple(r.critical, r.positive, r.abar1);
      },
      py::arg("coeffs"), py::arg("sigma"));

  // counting
  m.def(
      "count_basic",
      [](double alpha, int n_scale, int a_scale, std::array<int, 3> shift,
         int sign, double zeta_step) {
        CountingQuery q{alpha, n_scale, a_scale, 0, shift, sign};
        return report_to_dict(count_basic(q, zeta_step));
      },
      py::arg("alpha"), py::arg("n_scale"), py::arg("a_scale"),
      py::arg("shift"), py::arg("sign") = -1, py::arg("zeta_step") = 0.5);
  m.def(
      "count_two_balls",
      [](double alpha, int n_scale, int a_scale, int b_scale,
         std::array<int, 3> shift, int sign, double zeta_step) {
        CountingQuery q{alpha, n_scale, a_scale, b_scale, shift, sign};
        return report_to_dict(count_two_balls(q, zeta_step));
      },
      py::arg("alpha"), py::arg("n_scale"), py::arg("a_scale"),
      py::arg("b_scale"), py::arg("shift"), py::arg("sign") = -1,
      py::arg("zeta_step") = 0.5);
  m.def(
      "count_phase_k3",
      [](double alpha, std::array<int, 3> n_scales, std::array<int, 4> signs,
         double zeta_step) {
        return report_to_dict(count_phase_k3(alpha, n_scales, signs,
                                             zeta_step));
      },
      py::arg("alpha"), py::arg("n_scales"), py::arg("signs"),
      py::arg("zeta_step") = 0.5);
  m.def(
      "weighted_sum_k3",
      [](double alpha, double s, std::array<int, 3> n_scales,
         std::array<int, 4> signs, double zeta_step) {
        return report_to_dict(weighted_sum_k3(alpha, s, n_scales, signs,
                                              zeta_step));
      },
      py::arg("alpha"), py::arg("s"), py::arg("n_scales"), py::arg("signs"),
      py::arg("zeta_step") = 0.5);

  // experiment driver (same contract as the CLI)
  m.def(
      "run_subcommand",
      [](const std::string& name,
         const std::map<std::string, std::string>& kv) {
        RunConfig cfg;
        for (const auto& kvp : kv) cfg.set(kvp.first, kvp.second);
        return run_subcommand(name, cfg);
      },
      py::arg("name"), py::arg("options"),
      "runs one experiment; writes <out>.csv and <out>.json, returns the "
      "summary line");
  m.def("subcommands", [] { return subcommand_names(); });
}
