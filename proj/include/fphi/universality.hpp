#pragma once

#include "fphi/dynamics.hpp"

namespace fphi {

// Even microscopic polynomial V(z) = sum_{j=0}^{m} a_j z^{2j}, a_m != 0,
// m >= 2 for the universality pipeline.
struct MicroPotential {
  std::vector<double> a; // a[j] multiplies z^{2j}
  int degree2m() const { return 2 * (static_cast<int>(a.size()) - 1); }
};

// sigma = int_{|xi|<=1} |xi|^{-2 alpha} d xi = 4 pi / (3 - 2 alpha).
// Throws std::domain_error for alpha >= 3/2.
double continuum_sigma(double alpha);

// abar_j = (1/(2j)!) E[V^{(2j)}(N(0, sigma))]
//        = (1/(2j)!) sum_{l >= j} (2l)!/(2l-2j)!! a_l sigma^{l-j}.
std::vector<double> averaged_coeffs(const MicroPotential& v, double sigma);

// Gauss-Hermite quadrature route to abar_j (dual check of the moment
// formula): abar_j = (1/(2j)!) int V^{(2j)}(y) N(0, sigma)(dy).
std::vector<double> averaged_coeffs_quadrature(const MicroPotential& v,
                                               double sigma, int n_nodes = 32);

// sigma_tilde_N = N^{-(3-2 alpha)} sigma_N and abar_{j,N} (moment formula at
// sigma_tilde_N).
struct RenormCoeffsN {
  double sigma_tilde = 0.0;
  std::vector<double> abar_n;
};
RenormCoeffsN renorm_coeffs_N(const MicroPotential& v, double alpha, int n_cut);

// kappa from abar_{1,N} = abar_1 + (kappa/2) N^{-2(3/2-alpha)} + l.o.t.:
// least squares of y_N = 2 N^{2(3/2-alpha)} (abar_{1,N} - abar_1) against
// {1, N^{-min(1, 4(3/2-alpha))}}. Requires a critical potential (abar_1 = 0)
// and >= 3 scales; throws std::invalid_argument otherwise.
struct KappaFit {
  double kappa = 0.0;
  double stderr_ = 0.0;
};
KappaFit kappa_fit(const MicroPotential& v, double alpha,
                   const std::vector<int>& n_list);

// Hermite form of the renormalized macroscopic potential:
//   V_N(z) = sum_j c_j H_{2j}(z; sigma_N),  c_j = abar_{j,N} N^{-(2j-4)(3/2-alpha)}.
// V_N'(z) = sum_j c_j (2j) H_{2j-1}(z; sigma_N) (degree-0 term drops).
struct RenormalizedPotentialN {
  double alpha = 0.0;
  int trunc_n = 0;
  double sigma_n = 0.0;    // Hermite variance parameter
  std::vector<double> c;   // c[j] multiplies H_{2j}
  double eval(double z) const;
  double eval_derivative(double z) const;
};
RenormalizedPotentialN hermite_potential_VN(const MicroPotential& v,
                                            double alpha, int n_cut);

// Velocity kick pi_N V_N'(u) for the macroscopic flow (dealiased to degree
// 2m-1).
LatticeField macroscopic_kick(const LatticeField& u,
                              const RenormalizedPotentialN& vn);
void step_macroscopic(PhaseState& state, const RenormalizedPotentialN& vn,
                      const ModeKernels& kern, const StepScheme& scheme,
                      RngStream& rng, double t_now = 0.0);

// Criticality (|abar_1| below tol * scale) and positivity (P(y) =
// sum_{j>=2} abar_j y^{j-2} has positive leading coefficient and no root on
// [0, infinity); Sturm-chain root isolation).
struct CriticalityReport {
  bool critical = false;
  bool positive = false;
  double abar1 = 0.0;
};
CriticalityReport check_criticality_positivity(const MicroPotential& v,
                                               double sigma);

// Coupled comparison of the macroscopic flow (kick V_N') against the cubic
// reference (kick kappa u + 4 abar_2 :u^3:) with shared noise and initial
// data: per N, the ensemble median of sup over sampled times of
// ||u_N - u_N^dagger||_{H^{alpha-3/2-eps}}.
struct CoupledRow {
  int trunc_n = 0;
  double median_sup_diff = 0.0;
};
struct CoupledResult {
  std::vector<CoupledRow> rows;
  bool strictly_decreasing = false;
  double kappa_used = 0.0;
  double a2bar_used = 0.0;
};
CoupledResult coupled_convergence_experiment(const MicroPotential& v,
                                             double alpha, double t_final,
                                             const std::vector<int>& n_list,
                                             int ensemble, double dt,
                                             RngStream& rng, double eps = 0.1);

} // namespace fphi
