#pragma once

#include "fphi/gibbs.hpp"

namespace fphi {

// Piecewise-constant drift theta(t) on `time_knots` uniform sub-intervals of
// [0,1]; values are band-N fields in L^2 (coefficient) units.
struct DriftPath {
  int time_knots = 1;
  std::vector<LatticeField> values;
};

// Brownian-field path on the knot grid: Y(t_j) with coefficients
// <n>^{-alpha} B_n(t_j), E|B_n(t)|^2 = t. The j-th entry is Y(t_j), t_0 = 0.
struct FieldPath {
  int time_knots = 1;
  std::vector<LatticeField> values; // size time_knots + 1
};
FieldPath sample_brownian_field_path(const Lattice& lat, int time_knots,
                                     RngStream& rng);

// Shifted-drift change of variables: Upsilon-dot(t_j) = Theta-dot(t_j) +
// z-dot(t_j), with z-dot(t) = pi_N <D>^{-2 alpha} F[:Y(t)^3:] (Wick variance
// t sigma_N) and Theta-dot(t) = <D>^{-alpha} theta(t). Pass theta = nullptr
// for the pure z-dot path. Throws std::invalid_argument on grid mismatch.
DriftPath drift_change_of_variables(const WickTable& table, const FieldPath& y,
                                    const DriftPath* theta = nullptr);

// (1/2) int_0^1 ||Upsilon-dot(t)||^2_{H^alpha} dt by the composite trapezoid
// rule on the knot grid.
double half_halpha_energy(const WickTable& table, const DriftPath& upsilon_dot);

// Monte-Carlo check data for the shifted-drift identity
//   (1/2) E int ||Upsilon-dot||^2_{H^alpha} dt - alpha_N
//     = E [ <:Y(1)^3:, Theta(1)>_c + (1/2) int ||theta||^2 dt ]
// with a fixed deterministic drift theta; returns per-path paired
// differences lhs_i - rhs_i (mean should vanish within MC error).
std::vector<double> shifted_drift_identity_samples(const WickTable& table,
                                                   const DriftPath& theta,
                                                   int n_paths, RngStream& rng);

struct OptConfig {
  int iterations = 400;
  int n_paths = 32;       // common-random-number batch
  int n_eval_paths = 256; // fresh batch for the reported objective
  double lr = 0.05;
  double beta1 = 0.9, beta2 = 0.999;
};

struct VariationalResult {
  double objective = 0.0; // fresh-batch estimate of the optimized bound
  double se = 0.0;
  DriftPath drift;
  std::vector<double> trace; // in-sample objective per iteration
};

// Minimizes E[F(Y(1) + pi_N I(theta)(1)) + (1/2) int ||theta||^2 dt] over
// open-loop piecewise-constant drifts by Adam with pathwise gradients and
// common random numbers; F defaults to Rbar^{diamond} (per-volume). The
// result is an upper bound for -log Z^{diamond} up to MC/knot error.
// linear_f_coeff != 0 replaces F by c * u_hat(0) (the analytic test case
// with optimum -c^2/2). Throws std::runtime_error if the objective diverges.
VariationalResult boue_dupuis_minimize(const WickTable& table,
                                       const DriftPath& init,
                                       const OptConfig& cfg, RngStream& rng,
                                       double linear_f_coeff = 0.0);

// Objective and gradient at a given drift for fixed noise paths (exposed for
// the finite-difference gradient test).
double bd_objective_grad(const WickTable& table, const DriftPath& theta,
                         const std::vector<FieldPath>& paths,
                         double linear_f_coeff, DriftPath* grad_out);

} // namespace fphi
