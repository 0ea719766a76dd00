#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace fphi {

// Dyadic shell |n| ~ N: the ball |n| <= 1 at N = 1, the half-open annulus
// N/2 < |n| <= N for N >= 2.
std::vector<std::array<int, 3>> dyadic_shell(int n_scale);

struct CountingQuery {
  double alpha = 1.25;
  int n_scale = 1;               // N
  int a_scale = 1;               // A (|a| ~ A when a != 0)
  int b_scale = 0;               // B, two-ball variant only
  std::array<int, 3> shift{0, 0, 0}; // a
  int sign = -1;                 // +-1 in [[a+n]] + sign [[n]]
};

struct BoundReport {
  std::int64_t observed_sup_count = 0; // sup over the zeta grid
  double bound_value = 0.0;
  double ratio = 0.0;
  double sup_zeta = 0.0;               // maximizing zeta
  double weighted_sum = 0.0;           // weighted variant only
};

// #{ n : |n| ~ N, | [[a+n]] + sign [[n]] - zeta | <= 1 }, sup over a zeta
// grid of spacing `zeta_step` covering the attainable phase range, against
// min(A, N)^{-1} N^3.
BoundReport count_basic(const CountingQuery& q, double zeta_step = 0.5);

// As count_basic with the extra constraint |n + a| ~ B, against
// min(A, B, N)^{-1} min(B, N)^3.
BoundReport count_two_balls(const CountingQuery& q, double zeta_step = 0.5);

// Triples from shells |n_j| ~ N_j with phase kappa(n) = eps0 [[n1+n2+n3]] +
// sum_j eps_j [[n_j]], |kappa - zeta| <= 1, against (second-largest N_j)^{-1}
// prod N_j^3. Budget guard: throws std::invalid_argument when any N_j > 4.
BoundReport count_phase_k3(double alpha, const std::array<int, 3>& n_scales,
                           const std::array<int, 4>& signs,
                           double zeta_step = 0.5);

// Weighted variant: sum over the same triples of
// prod [[n_j]]^{-2} <n1+n2+n3>^{2(s-alpha)} 1_{|kappa-zeta|<=1}, against
// N_max^{2s - 6 alpha + 6}. Requires s >= alpha - 1.
BoundReport weighted_sum_k3(double alpha, double s,
                            const std::array<int, 3>& n_scales,
                            const std::array<int, 4>& signs,
                            double zeta_step = 0.5);

} // namespace fphi
