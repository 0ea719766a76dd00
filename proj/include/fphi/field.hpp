#pragma once

#include <complex>
#include <vector>

#include "fphi/lattice.hpp"
#include "fphi/rng.hpp"

namespace fphi {

using cplx = std::complex<double>;

// Band-limited real field on T^3 = (R/2piZ)^3, stored as the coefficients
// u(x) = sum_{|n| <= N} c(n) e^{i n.x} over the wrap-around cube. Hermitian
// symmetry c(-n) = conj(c(n)) is an invariant maintained by every operation.
struct LatticeField {
  Lattice lat;
  std::vector<cplx> coeffs; // size (2N+1)^3, cube order; zero outside the ball

  LatticeField() = default;
  explicit LatticeField(const Lattice& l)
      : lat(l), coeffs(static_cast<std::size_t>(l.table().side) *
                       l.table().side * l.table().side) {}

  cplx& at(int n1, int n2, int n3) {
    return coeffs[lat.table().index_of(n1, n2, n3)];
  }
  const cplx& at(int n1, int n2, int n3) const {
    return coeffs[lat.table().index_of(n1, n2, n3)];
  }

  LatticeField& operator+=(const LatticeField& o);
  LatticeField& operator-=(const LatticeField& o);
  LatticeField& operator*=(double s);
};

LatticeField operator+(LatticeField a, const LatticeField& b);
LatticeField operator-(LatticeField a, const LatticeField& b);
LatticeField operator*(double s, LatticeField a);

// Sharp Fourier projection to |n| <= n_cut (identity when n_cut >= N).
LatticeField project(const LatticeField& f, int n_cut);

// (sum_n <n>^{2s} |c(n)|^2)^{1/2}; the coefficient-space H^s norm.
double sobolev_norm(const LatticeField& f, double s);

// sum_n |c(n)|^2  (== spatial mean of u^2 by Parseval).
double l2sq_coeff(const LatticeField& f);

// Largest |c(-n) - conj(c(n))| over the ball; 0 for a valid real field.
double hermitian_defect(const LatticeField& f);

bool has_nan(const LatticeField& f);

// Gaussian samples. Position law: E|c(n)|^2 = <n>^{-2 alpha} (n=0 real,
// variance 1); representative modes have independent N(0,1/2) real and
// imaginary parts, mirrored conjugate partners. Velocity law: E|c(n)|^2 = 1.
LatticeField sample_position_field(const Lattice& lat, RngStream& rng);
LatticeField sample_velocity_field(const Lattice& lat, RngStream& rng);

struct PhaseState {
  LatticeField pos;
  LatticeField vel;
};

// Draws (pos, vel) jointly: one pass over ball modes in storage order,
// position pair then velocity pair per representative.
PhaseState sample_gaussian_pair(const Lattice& lat, RngStream& rng);

} // namespace fphi
