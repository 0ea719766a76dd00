#pragma once

#include <optional>

#include "fphi/fft3.hpp"

namespace fphi {

// Volume of the torus (R/2piZ)^3; spatial integrals of coefficient-space
// means carry this factor explicitly.
inline constexpr double torus_volume = 248.05021344239853; // (2*pi)^3

// H_k(x; sigma) from the generating function e^{tx - sigma t^2/2},
// via the stable recurrence H_{k+1} = x H_k - sigma k H_{k-1}.
double hermite(int k, double x, double sigma);

// sum_{|n| <= n_cut} <n>^{expo} by direct enumeration (no tables).
double ball_symbol_sum(int n_cut, double expo);

// sigma_N = sum_{|n| <= N} <n>^{-2 alpha}.
double sigma_N(double alpha, int n_cut);

// S_N = sum_{|n| <= N} c(n) (c*c*c)(n) with c = <n>^{-2 alpha} 1_{|n|<=N};
// equals the zero-mode quadruple convolution sum_{n1+n2+n3+n4=0} prod c(ni).
// FFT self-convolution, exact on the consumed window.
double quad_conv_sum(double alpha, int n_cut);

// alpha_N = (3/4) S_N, the second-order renormalization constant.
double alpha_N(double alpha, int n_cut);

struct WickTable {
  double alpha = 1.25;
  int trunc_n = 1;
  double sigma_n = 0.0;
  std::optional<double> alpha_n;   // populated on request (costs an FFT)
  std::optional<double> quad_conv; // S_N, kept when alpha_n is computed

  WickTable() = default;
  WickTable(double a, int n, bool with_alpha_n = false);
  Lattice lattice() const { return Lattice(alpha, trunc_n); }
};

// Spectral coefficients of H_k(f(x); sigma) on |n| <= k*N (pointwise Hermite
// on a grid with M >= 2kN+1, transformed back; exact to roundoff).
LatticeField wick_power(const LatticeField& f, int k, double sigma);

// R_N(f) = (1/4) int :f^4: dx = (1/4)(2pi)^3 * mean_x H_4(f; sigma_N).
double potential_RN(const LatticeField& f, const WickTable& table);

// R_N(f)/(2pi)^3: the per-volume potential used in sampling densities.
double potential_RN_intensive(const LatticeField& f, const WickTable& table);

// R_N + alpha_N. Throws std::logic_error when table.alpha_n is absent.
double potential_RN_diamond(const LatticeField& f, const WickTable& table);

// Var_mu(R_N) = (2pi)^6 (4!/16) S_N, exact under the Gaussian reference.
double potential_RN_variance(const WickTable& table);

} // namespace fphi
