#include "fphi/wick.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fphi {

double hermite(int k, double x, double sigma) {
  if (k < 0) throw std::invalid_argument("hermite: negative degree");
  double hm1 = 0.0, h = 1.0;
  for (int j = 0; j < k; ++j) {
    double hp1 = x * h - sigma * static_cast<double>(j) * hm1;
    hm1 = h;
    h = hp1;
  }
  return h;
}

// sum over the ball |n| <= N of <n>^{expo}; direct triple loop (no tables,
// so large N stays cheap in memory).
double ball_symbol_sum(int n_cut, double expo) {
  double acc = 0.0;
  const long long rsq = static_cast<long long>(n_cut) * n_cut;
  for (int n1 = -n_cut; n1 <= n_cut; ++n1)
    for (int n2 = -n_cut; n2 <= n_cut; ++n2) {
      long long part = static_cast<long long>(n1) * n1 +
                       static_cast<long long>(n2) * n2;
      if (part > rsq) continue;
      for (int n3 = -n_cut; n3 <= n_cut; ++n3) {
        long long r = part + static_cast<long long>(n3) * n3;
        if (r <= rsq) acc += std::pow(1.0 + static_cast<double>(r), expo / 2.0);
      }
    }
  return acc;
}

double sigma_N(double alpha, int n_cut) {
  if (n_cut < 1) throw std::invalid_argument("sigma_N: n_cut must be >= 1");
  return ball_symbol_sum(n_cut, -2.0 * alpha);
}

double quad_conv_sum(double alpha, int n_cut) {
  if (n_cut < 1) throw std::invalid_argument("quad_conv_sum: n_cut must be >= 1");
  // Aliased images of the band-3N self-convolution sit at distance >= L-3N
  // from the origin, so L >= 4N+1 keeps the consumed window |n| <= N exact.
  const int L = next_friendly(4 * n_cut + 1);
  const std::size_t cube = static_cast<std::size_t>(L) * L * L;
  fftw_complex* buf =
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cube));
  if (!buf) throw std::bad_alloc();
  std::memset(buf, 0, sizeof(fftw_complex) * cube);
  auto wrap = [L](int n) { return n >= 0 ? n : n + L; };
  const long long rsq = static_cast<long long>(n_cut) * n_cut;
  for (int n1 = -n_cut; n1 <= n_cut; ++n1)
    for (int n2 = -n_cut; n2 <= n_cut; ++n2)
      for (int n3 = -n_cut; n3 <= n_cut; ++n3) {
        long long r = static_cast<long long>(n1) * n1 +
                      static_cast<long long>(n2) * n2 +
                      static_cast<long long>(n3) * n3;
        if (r > rsq) continue;
        std::size_t g =
            (static_cast<std::size_t>(wrap(n1)) * L + wrap(n2)) * L + wrap(n3);
        buf[g][0] = std::pow(1.0 + static_cast<double>(r), -alpha);
      }
  fftw_plan fwd = fftw_plan_dft_3d(L, L, L, buf, buf, FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (std::size_t i = 0; i < cube; ++i) {
    // (re + i im)^3; kernel is real-even so im is roundoff, kept for exactness
    double re = buf[i][0], im = buf[i][1];
    double re2 = re * re - im * im, im2 = 2.0 * re * im;
    buf[i][0] = re2 * re - im2 * im;
    buf[i][1] = re2 * im + im2 * re;
  }
  fftw_plan bwd = fftw_plan_dft_3d(L, L, L, buf, buf, FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  const double inv = 1.0 / static_cast<double>(cube);
  double acc = 0.0;
  for (int n1 = -n_cut; n1 <= n_cut; ++n1)
    for (int n2 = -n_cut; n2 <= n_cut; ++n2)
      for (int n3 = -n_cut; n3 <= n_cut; ++n3) {
        long long r = static_cast<long long>(n1) * n1 +
                      static_cast<long long>(n2) * n2 +
                      static_cast<long long>(n3) * n3;
        if (r > rsq) continue;
        std::size_t g =
            (static_cast<std::size_t>(wrap(n1)) * L + wrap(n2)) * L + wrap(n3);
        acc += std::pow(1.0 + static_cast<double>(r), -alpha) * buf[g][0] * inv;
      }
  fftw_free(buf);
  return acc;
}

double alpha_N(double alpha, int n_cut) {
  return 0.75 * quad_conv_sum(alpha, n_cut);
}

WickTable::WickTable(double a, int n, bool with_alpha_n)
    : alpha(a), trunc_n(n), sigma_n(sigma_N(a, n)) {
  if (with_alpha_n) {
    quad_conv = quad_conv_sum(a, n);
    alpha_n = 0.75 * *quad_conv;
  }
}

LatticeField wick_power(const LatticeField& f, int k, double sigma) {
  if (k < 1) throw std::invalid_argument("wick_power: degree must be >= 1");
  if (k == 1) return f;
  const int n = f.lat.trunc_n;
  // Full band k*n is read back, so alias images of the degree-k polynomial
  // must clear it: M >= 2*k*n + 1.
  const int m = next_friendly(2 * k * n + 1);
  std::vector<double> vals = field_to_grid(f, m);
  for (double& x : vals) x = hermite(k, x, sigma);
  return grid_to_field(vals, m, f.lat.alpha, k * n);
}

double potential_RN_intensive(const LatticeField& f, const WickTable& table) {
  const double s = table.sigma_n;
  return 0.25 * grid_mean_poly(f, {3.0 * s * s, 0.0, -6.0 * s, 0.0, 1.0});
}

double potential_RN(const LatticeField& f, const WickTable& table) {
  return torus_volume * potential_RN_intensive(f, table);
}

double potential_RN_diamond(const LatticeField& f, const WickTable& table) {
  if (!table.alpha_n)
    throw std::logic_error("potential_RN_diamond: table.alpha_n not populated");
  return potential_RN(f, table) + *table.alpha_n;
}

double potential_RN_variance(const WickTable& table) {
  double s = table.quad_conv ? *table.quad_conv
                             : quad_conv_sum(table.alpha, table.trunc_n);
  return torus_volume * torus_volume * 1.5 * s;
}

} // namespace fphi
