#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace fphi {

// Smallest integer >= x whose prime factors are all in {2,3,5}.
int next_friendly(int x);

// <n>^2 = 1 + |n|^2.
inline double jb2(int n1, int n2, int n3) {
  return 1.0 + static_cast<double>(n1) * n1 + static_cast<double>(n2) * n2 +
         static_cast<double>(n3) * n3;
}

// [[n]] = sqrt(<n>^{2 alpha} - 1/4), the damped-wave oscillation frequency.
inline double bracket_symbol(const std::array<int, 3>& n, double alpha) {
  return std::sqrt(std::pow(jb2(n[0], n[1], n[2]), alpha) - 0.25);
}

// Geometry tables for the frequency cube [-N,N]^3 stored in wrap-around
// order per dimension (0,1,..,N,-N,..,-1), index varying fastest in n3.
// Shared per N; alpha enters only through the symbols, never the tables.
struct ModeTable {
  int trunc_n = 0;
  int side = 0;                       // 2N+1
  std::vector<double> nsq;            // |n|^2 per cube index
  std::vector<std::int32_t> ball;     // cube indices with |n| <= N, storage order
  std::vector<std::int32_t> ball_rep; // ball indices of representatives (first
                                      // nonzero component positive) plus n=0
  std::vector<std::int32_t> conj_idx; // cube index of -n per cube index

  int wrap(int n) const { return n >= 0 ? n : n + side; }
  int index_of(int n1, int n2, int n3) const {
    return (wrap(n1) * side + wrap(n2)) * side + wrap(n3);
  }
  std::array<int, 3> decode(int idx) const {
    int i3 = idx % side, i2 = (idx / side) % side, i1 = idx / (side * side);
    auto unwrap = [this](int i) { return i <= trunc_n ? i : i - side; };
    return {unwrap(i1), unwrap(i2), unwrap(i3)};
  }
  bool in_ball(int idx) const {
    return nsq[idx] <= static_cast<double>(trunc_n) * trunc_n + 0.5;
  }
};

const ModeTable& mode_table(int trunc_n);

// Lattice geometry: dispersion order, sharp ball cutoff N, and the default
// physical grid (>= 4N+1, rounded to an FFT-friendly size) on which cubic
// nonlinearities of band-N fields are alias-free.
struct Lattice {
  double alpha = 1.25;
  int trunc_n = 1;
  int grid_m = 0;

  Lattice() = default;
  Lattice(double a, int n, int m = 0)
      : alpha(a), trunc_n(n), grid_m(m > 0 ? m : next_friendly(4 * n + 1)) {}

  const ModeTable& table() const { return mode_table(trunc_n); }
  bool operator==(const Lattice& o) const {
    return alpha == o.alpha && trunc_n == o.trunc_n;
  }
};

// True when the first nonzero component of n is positive (one member of each
// conjugate pair {n,-n}); false for n = 0 and for the mirrored partners.
inline bool is_representative(const std::array<int, 3>& n) {
  if (n[0] != 0) return n[0] > 0;
  if (n[1] != 0) return n[1] > 0;
  return n[2] > 0;
}

} // namespace fphi
