#include "fphi/universality.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fphi/stats.hpp"

namespace fphi {

double continuum_sigma(double alpha) {
  if (alpha >= 1.5)
    throw std::domain_error("continuum_sigma: requires alpha < 3/2");
  return 4.0 * 3.14159265358979323846 / (3.0 - 2.0 * alpha);
}

namespace {

double fact(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double even_dfact(int n) { // n!! for even n >= 0
  double f = 1.0;
  for (int i = n; i >= 2; i -= 2) f *= i;
  return f;
}

void validate_potential(const MicroPotential& v) {
  if (v.a.size() < 3)
    throw std::invalid_argument("MicroPotential: need degree >= 4 (m >= 2)");
  if (v.a.back() == 0.0)
    throw std::invalid_argument("MicroPotential: leading coefficient is zero");
}

} // namespace

std::vector<double> averaged_coeffs(const MicroPotential& v, double sigma) {
  validate_potential(v);
  const int m = static_cast<int>(v.a.size()) - 1;
  std::vector<double> abar(m + 1, 0.0);
  for (int j = 0; j <= m; ++j) {
    double acc = 0.0;
    for (int l = j; l <= m; ++l)
      acc += fact(2 * l) / even_dfact(2 * l - 2 * j) * v.a[l] *
             std::pow(sigma, l - j);
    abar[j] = acc / fact(2 * j);
  }
  return abar;
}

namespace {

// Nodes/weights of n-point Gauss-Hermite quadrature (weight e^{-x^2}),
// orthonormal-recurrence Newton iteration.
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  const double eps = 1e-14;
  const double pim4 = 0.7511255444649425; // pi^{-1/4}
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  double z = 0.0, pp = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= eps) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
}

// Coefficients (low->high) of d^k/dz^k V for the even polynomial V.
std::vector<double> derivative_coeffs(const MicroPotential& v, int k) {
  std::vector<double> p(v.degree2m() + 1, 0.0);
  for (std::size_t l = 0; l < v.a.size(); ++l) p[2 * l] = v.a[l];
  for (int d = 0; d < k; ++d) {
    for (std::size_t i = 1; i < p.size(); ++i)
      p[i - 1] = static_cast<double>(i) * p[i];
    p.pop_back();
    if (p.empty()) return {0.0};
  }
  return p;
}

double horner(const std::vector<double>& p, double z) {
  double acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * z + p[i];
  return acc;
}

} // namespace

std::vector<double> averaged_coeffs_quadrature(const MicroPotential& v,
                                               double sigma, int n_nodes) {
  validate_potential(v);
  if (n_nodes < v.degree2m() / 2 + 1)
    throw std::invalid_argument("averaged_coeffs_quadrature: too few nodes");
  std::vector<double> x, w;
  gauss_hermite(n_nodes, x, w);
  const double scale = std::sqrt(2.0 * sigma);
  const double inv_rt_pi = 0.5641895835477563; // pi^{-1/2}
  const int m = static_cast<int>(v.a.size()) - 1;
  std::vector<double> abar(m + 1, 0.0);
  for (int j = 0; j <= m; ++j) {
    std::vector<double> d = derivative_coeffs(v, 2 * j);
    double acc = 0.0;
    for (int i = 0; i < n_nodes; ++i) acc += w[i] * horner(d, scale * x[i]);
    abar[j] = inv_rt_pi * acc / fact(2 * j);
  }
  return abar;
}

RenormCoeffsN renorm_coeffs_N(const MicroPotential& v, double alpha,
                              int n_cut) {
  RenormCoeffsN out;
  out.sigma_tilde = std::pow(static_cast<double>(n_cut), -(3.0 - 2.0 * alpha)) *
                    sigma_N(alpha, n_cut);
  out.abar_n = averaged_coeffs(v, out.sigma_tilde);
  return out;
}

KappaFit kappa_fit(const MicroPotential& v, double alpha,
                   const std::vector<int>& n_list) {
  if (n_list.size() < 3)
    throw std::invalid_argument("kappa_fit: need >= 3 truncation scales");
  const double sigma = continuum_sigma(alpha);
  std::vector<double> abar = averaged_coeffs(v, sigma);
  double scale = 0.0;
  const int m = static_cast<int>(v.a.size()) - 1;
  for (int l = 1; l <= m; ++l)
    scale += std::abs(fact(2 * l) / even_dfact(2 * l - 2) * v.a[l] *
                      std::pow(sigma, l - 1)) /
             2.0;
  if (std::abs(abar[1]) > 1e-12 * std::max(scale, 1e-300))
    throw std::invalid_argument(
        "kappa_fit: potential is not critical (abar_1 != 0 at the continuum "
        "sigma)");

  // y_N = 2 N^{2(3/2-alpha)} (abar_{1,N} - abar_1) = kappa + b N^{-q} + ...
  const double rate = 2.0 * (1.5 - alpha);
  const double q = std::min(1.0, 4.0 * (1.5 - alpha));
  const std::size_t n = n_list.size();
  std::vector<double> y(n), x1(n);
  for (std::size_t i = 0; i < n; ++i) {
    double nn = static_cast<double>(n_list[i]);
    RenormCoeffsN rc = renorm_coeffs_N(v, alpha, n_list[i]);
    y[i] = 2.0 * std::pow(nn, rate) * (rc.abar_n[1] - abar[1]);
    x1[i] = std::pow(nn, -q);
  }
  // two-regressor least squares on {1, N^{-q}}
  double s0 = static_cast<double>(n), s1 = 0, s11 = 0, sy = 0, s1y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s1 += x1[i];
    s11 += x1[i] * x1[i];
    sy += y[i];
    s1y += x1[i] * y[i];
  }
  double det = s0 * s11 - s1 * s1;
  if (std::abs(det) < 1e-14 * s0 * s11)
    throw std::invalid_argument("kappa_fit: degenerate design (scales too close)");
  double beta0 = (s11 * sy - s1 * s1y) / det;
  double beta1 = (s0 * s1y - s1 * sy) / det;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - beta0 - beta1 * x1[i];
    rss += r * r;
  }
  KappaFit kf;
  kf.kappa = beta0;
  kf.stderr_ = n > 2 ? std::sqrt(rss / (n - 2) * s11 / det) : 0.0;
  return kf;
}

double RenormalizedPotentialN::eval(double z) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j)
    acc += c[j] * hermite(static_cast<int>(2 * j), z, sigma_n);
  return acc;
}

double RenormalizedPotentialN::eval_derivative(double z) const {
  double acc = 0.0;
  for (std::size_t j = 1; j < c.size(); ++j)
    acc += c[j] * 2.0 * static_cast<double>(j) *
           hermite(static_cast<int>(2 * j - 1), z, sigma_n);
  return acc;
}

RenormalizedPotentialN hermite_potential_VN(const MicroPotential& v,
                                            double alpha, int n_cut) {
  validate_potential(v);
  RenormalizedPotentialN vn;
  vn.alpha = alpha;
  vn.trunc_n = n_cut;
  vn.sigma_n = sigma_N(alpha, n_cut);
  RenormCoeffsN rc = renorm_coeffs_N(v, alpha, n_cut);
  vn.c.resize(rc.abar_n.size());
  for (std::size_t j = 0; j < vn.c.size(); ++j)
    vn.c[j] = rc.abar_n[j] * std::pow(static_cast<double>(n_cut),
                                      -(2.0 * j - 4.0) * (1.5 - alpha));
  return vn;
}

LatticeField macroscopic_kick(const LatticeField& u,
                              const RenormalizedPotentialN& vn) {
  if (u.lat.trunc_n != vn.trunc_n)
    throw std::invalid_argument("macroscopic_kick: truncation mismatch");
  const int n = u.lat.trunc_n;
  const int deg = 2 * (static_cast<int>(vn.c.size()) - 1) - 1; // of V_N'
  const int m = next_friendly((deg + 1) * n + 1);
  std::vector<double> vals = field_to_grid(u, m);
  for (double& zv : vals) {
    // running Hermite recurrence picks out the odd-degree terms of V_N'
    double hm1 = 0.0, h = 1.0, acc = 0.0;
    for (int k = 1; k <= deg; ++k) {
      double hp1 = zv * h - vn.sigma_n * static_cast<double>(k - 1) * hm1;
      hm1 = h;
      h = hp1; // h = H_k
      if (k % 2 == 1) {
        std::size_t j = static_cast<std::size_t>((k + 1) / 2);
        if (j < vn.c.size()) acc += vn.c[j] * 2.0 * static_cast<double>(j) * h;
      }
    }
    zv = acc;
  }
  return grid_to_field(vals, m, u.lat.alpha, n);
}

void step_macroscopic(PhaseState& state, const RenormalizedPotentialN& vn,
                      const ModeKernels& kern, const StepScheme& scheme,
                      RngStream& rng, double t_now) {
  KickFn kick = [&vn](const LatticeField& u) { return macroscopic_kick(u, vn); };
  step_flow(state, kern, kick, scheme, rng, t_now);
}

namespace {

// Sturm chain of p (coeffs low->high, trimmed); count of distinct roots in
// (0, +inf) = sign changes at 0 minus sign changes at +inf.
std::vector<double> trim(std::vector<double> p, double tol) {
  while (p.size() > 1 && std::abs(p.back()) <= tol) p.pop_back();
  return p;
}

std::vector<double> poly_rem(std::vector<double> a, const std::vector<double>& b,
                             double tol) {
  while (a.size() >= b.size() && a.size() > 1) {
    double q = a.back() / b.back();
    std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= q * b[i];
    a.pop_back();
    a = trim(std::move(a), tol);
    if (a.size() < b.size()) break;
  }
  return a;
}

int sign_of(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }

int sign_changes(const std::vector<int>& signs) {
  int changes = 0, prev = 0;
  for (int s : signs) {
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  return changes;
}

int positive_real_roots(const std::vector<double>& poly) {
  double norm = 0.0;
  for (double c : poly) norm = std::max(norm, std::abs(c));
  const double tol = 1e-12 * std::max(norm, 1.0);
  std::vector<std::vector<double>> chain;
  chain.push_back(trim(poly, tol));
  if (chain[0].size() < 2) return 0;
  std::vector<double> d(chain[0].size() - 1);
  for (std::size_t i = 1; i < chain[0].size(); ++i)
    d[i - 1] = static_cast<double>(i) * chain[0][i];
  chain.push_back(trim(std::move(d), tol));
  while (chain.back().size() > 1) {
    std::vector<double> r =
        poly_rem(chain[chain.size() - 2], chain.back(), tol);
    for (double& c : r) c = -c;
    if (r.size() == 1 && std::abs(r[0]) <= tol) break;
    chain.push_back(std::move(r));
  }
  std::vector<int> at0, atinf;
  for (const auto& p : chain) {
    at0.push_back(sign_of(p.front(), tol));
    int lead = sign_of(p.back(), 0.0);
    atinf.push_back(lead);
  }
  return sign_changes(at0) - sign_changes(atinf);
}

} // namespace

CriticalityReport check_criticality_positivity(const MicroPotential& v,
                                               double sigma) {
  validate_potential(v);
  std::vector<double> abar = averaged_coeffs(v, sigma);
  CriticalityReport rep;
  rep.abar1 = abar[1];
  const int m = static_cast<int>(v.a.size()) - 1;
  double scale = 0.0;
  for (int l = 1; l <= m; ++l)
    scale += std::abs(fact(2 * l) / even_dfact(2 * l - 2) * v.a[l] *
                      std::pow(sigma, l - 1)) /
             2.0;
  rep.critical = std::abs(abar[1]) <= 1e-12 * std::max(scale, 1e-300);
  // P(y) = sum_{j>=2} abar_j y^{j-2} must be positive on [0, inf)
  std::vector<double> p(abar.begin() + 2, abar.end());
  rep.positive = !p.empty() && p.front() > 0.0 && p.back() > 0.0 &&
                 positive_real_roots(p) == 0;
  return rep;
}

CoupledResult coupled_convergence_experiment(const MicroPotential& v,
                                             double alpha, double t_final,
                                             const std::vector<int>& n_list,
                                             int ensemble, double dt,
                                             RngStream& rng, double eps) {
  validate_potential(v);
  if (n_list.empty() || ensemble < 2)
    throw std::invalid_argument("coupled_convergence_experiment: bad config");
  CoupledResult out;
  out.kappa_used = kappa_fit(v, alpha, {16, 32, 64, 128}).kappa;
  out.a2bar_used = averaged_coeffs(v, continuum_sigma(alpha))[2];
  const double s_diff = alpha - 1.5 - eps;
  const long long n_steps = std::llround(t_final / dt);

  for (int n : n_list) {
    WickTable table(alpha, n);
    const Lattice lat = table.lattice();
    const ModeTable& tab = lat.table();
    RenormalizedPotentialN vn = hermite_potential_VN(v, alpha, n);
    ModeKernels kern = make_mode_kernels(lat, dt);
    std::vector<double> sups(ensemble);
    for (int i = 0; i < ensemble; ++i) {
      PhaseState mac = sample_gaussian_pair(lat, rng);
      PhaseState dag = mac;
      double sup = 0.0;
      for (long long j = 0; j < n_steps; ++j) {
        PhaseState dz = noise_increment(lat, kern, rng);
        apply_propagator(mac, kern);
        for (std::int32_t idx : tab.ball) {
          mac.pos.coeffs[idx] += dz.pos.coeffs[idx];
          mac.vel.coeffs[idx] += dz.vel.coeffs[idx];
        }
        LatticeField km = macroscopic_kick(mac.pos, vn);
        apply_propagator(dag, kern);
        for (std::int32_t idx : tab.ball) {
          dag.pos.coeffs[idx] += dz.pos.coeffs[idx];
          dag.vel.coeffs[idx] += dz.vel.coeffs[idx];
        }
        LatticeField kd = cubic_kick(dag.pos, table);
        for (std::int32_t idx : tab.ball) {
          mac.vel.coeffs[idx] -= dt * km.coeffs[idx];
          dag.vel.coeffs[idx] -=
              dt * (out.kappa_used * dag.pos.coeffs[idx] +
                    4.0 * out.a2bar_used * kd.coeffs[idx]);
        }
        if (has_nan(mac.pos) || has_nan(dag.pos))
          throw std::runtime_error(
              "coupled_convergence_experiment: flow diverged (NaN)");
        LatticeField diff = mac.pos;
        diff -= dag.pos;
        sup = std::max(sup, sobolev_norm(diff, s_diff));
      }
      sups[i] = sup;
    }
    out.rows.push_back(CoupledRow{n, median_of(sups)});
  }
  out.strictly_decreasing = out.rows.size() >= 2;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (!(out.rows[i].median_sup_diff < out.rows[i - 1].median_sup_diff))
      out.strictly_decreasing = false;
  return out;
}

} // namespace fphi
