#pragma once

#include <vector>

#include "fphi/field.hpp"

namespace fphi {

// Grid values of f at the M^3 collocation points x_j = 2pi j / M,
// f(x_j) = sum_n c(n) e^{i n.x_j}; requires M >= 2N+1. Returns real parts
// (imaginary parts vanish to roundoff for Hermitian input).
std::vector<double> field_to_grid(const LatticeField& f, int grid_m);

// Inverse: reads the coefficients of a real grid function for |n| <= trunc_n.
LatticeField grid_to_field(const std::vector<double>& vals, int grid_m,
                           double alpha, int trunc_n);

// Exact spectral coefficients of f^k on |n| <= k*N, zero-padding to
// grid >= (k+1)N+1 so no aliased image lands in the kept band.
// Throws std::invalid_argument when k < 2 or grid too small to enlarge.
LatticeField dealiased_power(const LatticeField& f, int k);

// Exact coefficients of the pointwise product restricted to |n| <= n_out.
LatticeField dealiased_product(const LatticeField& a, const LatticeField& b,
                               int n_out);
LatticeField dealiased_product3(const LatticeField& a, const LatticeField& b,
                                const LatticeField& c, int n_out);

// Spatial mean of P(f(x)) for polynomial P of degree <= deg, computed on a
// grid large enough that the mean (mode 0) is alias-free: M >= deg*N + 1.
double grid_mean_poly(const LatticeField& f, const std::vector<double>& poly);

} // namespace fphi
