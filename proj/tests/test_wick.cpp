#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "fphi/stats.hpp"
#include "fphi/wick.hpp"

using namespace fphi;

namespace {

// Quadruple zero-momentum convolution by direct enumeration, O(|ball|^3):
// independent oracle for the FFT route.
double brute_quad_conv(double alpha, int n) {
  const ModeTable& t = mode_table(n);
  auto symbol = [&](double nsq) { return std::pow(1.0 + nsq, -alpha); };
  const double rsq = static_cast<double>(n) * n + 0.5;
  double acc = 0.0;
  for (int ia : t.ball) {
    std::array<int, 3> a = t.decode(ia);
    double ca = symbol(t.nsq[ia]);
    for (int ib : t.ball) {
      std::array<int, 3> b = t.decode(ib);
      double cb = symbol(t.nsq[ib]);
      for (int ic : t.ball) {
        std::array<int, 3> c = t.decode(ic);
        double s1 = a[0] + b[0] + c[0];
        double s2 = a[1] + b[1] + c[1];
        double s3 = a[2] + b[2] + c[2];
        double ssq = s1 * s1 + s2 * s2 + s3 * s3;
        if (ssq > rsq) continue;
        acc += ca * cb * symbol(t.nsq[ic]) * symbol(ssq);
      }
    }
  }
  return acc;
}

// Monomial expansions of the variance-1 Hermite polynomials up to degree 6.
double hermite_closed_form(int k, double x) {
  double x2 = x * x;
  switch (k) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return x2 - 1.0;
    case 3: return x * (x2 - 3.0);
    case 4: return x2 * x2 - 6.0 * x2 + 3.0;
    case 5: return x * (x2 * x2 - 10.0 * x2 + 15.0);
    case 6: return x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0;
  }
  return 0.0;
}

} // namespace

TEST_CASE("hermite polynomials") {
  SUBCASE("pinned identities") {
    CHECK(hermite(2, 2.0, 1.0) == 3.0);
    CHECK(hermite(3, 2.0, 1.0) == 2.0);
    CHECK(hermite(4, 0.0, 0.7) == doctest::Approx(3.0 * 0.49).epsilon(1e-15));
    CHECK(hermite(0, -3.7, 2.2) == 1.0);
    CHECK(hermite(1, -3.7, 2.2) == -3.7);
  }
  SUBCASE("recurrence matches closed forms at unit variance") {
    for (int k = 0; k <= 6; ++k)
      for (double x : {-1.7, 0.3, 2.4})
        CHECK(hermite(k, x, 1.0) ==
              doctest::Approx(hermite_closed_form(k, x)).epsilon(1e-13));
  }
  SUBCASE("variance scaling H_k(x; s) = s^{k/2} H_k(x / sqrt(s); 1)") {
    double s = 2.7;
    for (int k = 0; k <= 6; ++k)
      for (double x : {-1.1, 0.4, 3.0})
        CHECK(hermite(k, x, s) ==
              doctest::Approx(std::pow(s, 0.5 * k) *
                              hermite_closed_form(k, x / std::sqrt(s)))
                  .epsilon(1e-12));
  }
  SUBCASE("negative degree rejected") {
    CHECK_THROWS_AS(hermite(-1, 0.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("wick variance sigma_N") {
  SUBCASE("pinned values") {
    // N = 1: 1 + 6 * 2^{-3/2}.
    CHECK(sigma_N(1.5, 1) ==
          doctest::Approx(1.0 + 6.0 * std::pow(2.0, -1.5)).epsilon(1e-15));
    CHECK(sigma_N(1.5, 1) == doctest::Approx(3.1213203435596433).epsilon(1e-14));
    CHECK(sigma_N(1.5, 2) == doctest::Approx(6.967377734918096).epsilon(1e-12));
    CHECK(sigma_N(1.3, 1) == doctest::Approx(3.436757189068707).epsilon(1e-12));
    CHECK(sigma_N(1.3, 4) == doctest::Approx(19.460482702452808).epsilon(1e-10));
  }
  SUBCASE("agrees with the generic ball sum") {
    for (int n : {1, 2, 5})
      CHECK(sigma_N(1.2, n) ==
            doctest::Approx(ball_symbol_sum(n, -2.4)).epsilon(1e-14));
  }
  SUBCASE("divergence exponent 3 - 2 alpha") {
    for (double alpha : {1.1, 1.25, 1.4}) {
      std::vector<double> ns, xs;
      for (int n = 2; n <= 128; n *= 2) {
        ns.push_back(n);
        xs.push_back(sigma_N(alpha, n));
      }
      LineFit lf = fit_growth_exponent(ns, xs);
      CHECK(std::abs(lf.slope - (3.0 - 2.0 * alpha)) <= 0.1);
    }
  }
}

TEST_CASE("quadruple convolution sum") {
  SUBCASE("FFT route equals direct enumeration") {
    for (int n : {1, 2})
      for (double alpha : {1.05, 1.3, 1.5}) {
        double fft = quad_conv_sum(alpha, n);
        double brute = brute_quad_conv(alpha, n);
        CHECK(std::abs(fft - brute) <= 1e-10 * std::abs(brute));
      }
  }
  SUBCASE("pinned values") {
    CHECK(quad_conv_sum(1.3, 1) == doctest::Approx(9.3862090577483688).epsilon(1e-12));
    CHECK(quad_conv_sum(1.3, 2) == doctest::Approx(77.262544854606659).epsilon(1e-12));
  }
  SUBCASE("alpha_N is three quarters of the sum") {
    CHECK(alpha_N(1.3, 2) ==
          doctest::Approx(0.75 * quad_conv_sum(1.3, 2)).epsilon(1e-15));
    CHECK(alpha_N(1.3, 1) == doctest::Approx(7.039656793311277).epsilon(1e-12));
  }
  SUBCASE("table populates the constants on request") {
    WickTable t(1.3, 2, true);
    CHECK(t.alpha_n.has_value());
    CHECK(t.quad_conv.has_value());
    CHECK(*t.alpha_n == doctest::Approx(57.946908640954994).epsilon(1e-12));
    WickTable bare(1.3, 2);
    CHECK(!bare.alpha_n.has_value());
  }
}

TEST_CASE("wick powers of a single-mode field") {
  // u(x) = A cos(x1): all coefficients known in closed form.
  const double A = 1.3, sig = 0.3;
  Lattice lat(1.25, 1);
  LatticeField u(lat);
  u.at(1, 0, 0) = cplx(A / 2, 0.0);
  u.at(-1, 0, 0) = cplx(A / 2, 0.0);

  SUBCASE("quadratic") {
    LatticeField h2 = wick_power(u, 2, sig);
    CHECK(h2.lat.trunc_n == 2);
    CHECK(h2.at(0, 0, 0).real() ==
          doctest::Approx(A * A / 2 - sig).epsilon(1e-13));
    CHECK(h2.at(2, 0, 0).real() == doctest::Approx(A * A / 4).epsilon(1e-13));
    CHECK(std::abs(h2.at(1, 0, 0)) <= 1e-14);
    CHECK(std::abs(h2.at(0, 1, 0)) <= 1e-14);
    CHECK(hermitian_defect(h2) <= 1e-14);
  }
  SUBCASE("cubic") {
    LatticeField h3 = wick_power(u, 3, sig);
    CHECK(h3.lat.trunc_n == 3);
    CHECK(h3.at(1, 0, 0).real() ==
          doctest::Approx(3 * A * A * A / 8 - 1.5 * sig * A).epsilon(1e-13));
    CHECK(h3.at(3, 0, 0).real() ==
          doctest::Approx(A * A * A / 8).epsilon(1e-13));
    CHECK(std::abs(h3.at(0, 0, 0)) <= 1e-14);
    CHECK(std::abs(h3.at(2, 0, 0)) <= 1e-14);
  }
  SUBCASE("degree one returns the field unchanged") {
    LatticeField h1 = wick_power(u, 1, sig);
    CHECK(h1.at(1, 0, 0) == u.at(1, 0, 0));
  }
}

TEST_CASE("hermite orthogonality under the gaussian it is built for") {
  // E[H_k(X; c) H_l(X; c)] = delta_{kl} k! c^k for X ~ N(0, c).
  const double c = 1.3;
  const int n_samp = 200000;
  RngStream rng(77, 0);
  std::array<std::array<double, 5>, 5> acc{}, acc2{};
  for (int i = 0; i < n_samp; ++i) {
    double x = std::sqrt(c) * rng.normal();
    double h[5];
    for (int k = 0; k <= 4; ++k) h[k] = hermite(k, x, c);
    for (int k = 0; k <= 4; ++k)
      for (int l = k; l <= 4; ++l) {
        double p = h[k] * h[l];
        acc[k][l] += p;
        acc2[k][l] += p * p;
      }
  }
  double fact[5] = {1, 1, 2, 6, 24};
  for (int k = 0; k <= 4; ++k)
    for (int l = k; l <= 4; ++l) {
      double mean = acc[k][l] / n_samp;
      double var = acc2[k][l] / n_samp - mean * mean;
      double se = std::sqrt(var / n_samp);
      double expect = (k == l) ? fact[k] * std::pow(c, k) : 0.0;
      INFO("k=", k, " l=", l);
      CHECK(std::abs(mean - expect) <= 4.0 * se);
    }
}

TEST_CASE("quartic potential on a known field") {
  const double A = 0.9;
  WickTable table(1.25, 1);
  const double sig = table.sigma_n;
  Lattice lat = table.lattice();
  LatticeField u(lat);
  u.at(1, 0, 0) = cplx(A / 2, 0.0);
  u.at(-1, 0, 0) = cplx(A / 2, 0.0);
  // mean H_4(A cos x; s) = 3A^4/8 - 3 s A^2 + 3 s^2.
  double mean_h4 = 3 * std::pow(A, 4) / 8 - 3 * sig * A * A + 3 * sig * sig;

  CHECK(potential_RN_intensive(u, table) ==
        doctest::Approx(0.25 * mean_h4).epsilon(1e-12));
  CHECK(potential_RN(u, table) ==
        doctest::Approx(0.25 * torus_volume * mean_h4).epsilon(1e-12));
  CHECK_THROWS_AS(potential_RN_diamond(u, table), std::logic_error);
  WickTable full(1.25, 1, true);
  CHECK(potential_RN_diamond(u, full) ==
        doctest::Approx(potential_RN(u, full) + *full.alpha_n).epsilon(1e-13));
}

TEST_CASE("quartic potential is centered under the reference gaussian") {
  WickTable table(1.25, 2, true);
  Lattice lat = table.lattice();
  const int n_samp = 3000;
  RngStream rng(101, 0);
  std::vector<double> rs;
  for (int i = 0; i < n_samp; ++i) {
    LatticeField u = sample_position_field(lat, rng);
    rs.push_back(potential_RN(u, table));
  }
  MeanSe m = mean_se(rs);
  CHECK(std::abs(m.mean) <= 3.0 * m.se);

  // Sample variance against the exact chaos variance (2pi)^6 (3/2) S_N,
  // with the standard error of a sample variance from the fourth moment.
  double v = variance_of(rs);
  double m4 = 0.0;
  for (double r : rs) m4 += std::pow(r - m.mean, 4);
  m4 /= n_samp;
  double se_var = std::sqrt((m4 - v * v) / n_samp);
  double exact = potential_RN_variance(table);
  CHECK(std::abs(v - exact) <= 3.0 * se_var);
}
