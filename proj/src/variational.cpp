#include "fphi/variational.hpp"

#include <cmath>
#include <stdexcept>

#include "fphi/dynamics.hpp"

namespace fphi {

namespace {

// One complex-Gaussian fill with per-mode scale, accumulated onto f.
void add_gaussian_increment(LatticeField& f, double scale_root_dt, double alpha,
                            RngStream& rng) {
  const ModeTable& tab = f.lat.table();
  const double inv_rt2 = 0.70710678118654752440;
  for (std::int32_t idx : tab.ball_rep) {
    double s = scale_root_dt * std::pow(1.0 + tab.nsq[idx], -0.5 * alpha);
    double z0, z1;
    rng.normal_pair(z0, z1);
    if (tab.nsq[idx] == 0.0) {
      f.coeffs[idx] += cplx(s * z0, 0.0);
      continue;
    }
    cplx dz(s * inv_rt2 * z0, s * inv_rt2 * z1);
    f.coeffs[idx] += dz;
    f.coeffs[tab.conj_idx[idx]] += std::conj(dz);
  }
}

double l2sq_ball(const LatticeField& f) { return l2sq_coeff(f); }

// sum_n <n>^{2s} |c|^2 over the ball.
double hs_sq(const LatticeField& f, double s) {
  const ModeTable& tab = f.lat.table();
  double acc = 0.0;
  for (std::int32_t idx : tab.ball)
    acc += std::pow(1.0 + tab.nsq[idx], s) * std::norm(f.coeffs[idx]);
  return acc;
}

// Real coefficient pairing sum_n f(n) conj(g(n)) over the smaller ball.
double pair_c(const LatticeField& f, const LatticeField& g) {
  const LatticeField& small = f.lat.trunc_n <= g.lat.trunc_n ? f : g;
  const LatticeField& big = f.lat.trunc_n <= g.lat.trunc_n ? g : f;
  const ModeTable& tab = small.lat.table();
  double acc = 0.0;
  for (std::int32_t idx : tab.ball) {
    auto n = tab.decode(idx);
    acc += (small.coeffs[idx] * std::conj(big.at(n[0], n[1], n[2]))).real();
  }
  return acc;
}

// pi_N <D>^{-2a} F[H_3(y; sigma)] evaluated to band N, all in one grid pass.
LatticeField zdot_field(const LatticeField& y, double sigma, double alpha) {
  const int n = y.lat.trunc_n;
  const int m = std::max(y.lat.grid_m, next_friendly(4 * n + 1));
  std::vector<double> vals = field_to_grid(y, m);
  const double s3 = 3.0 * sigma;
  for (double& x : vals) x = x * x * x - s3 * x;
  LatticeField g = grid_to_field(vals, m, alpha, n);
  const ModeTable& tab = g.lat.table();
  for (std::int32_t idx : tab.ball)
    g.coeffs[idx] *= std::pow(1.0 + tab.nsq[idx], -alpha);
  return g;
}

} // namespace

FieldPath sample_brownian_field_path(const Lattice& lat, int time_knots,
                                     RngStream& rng) {
  if (time_knots < 1)
    throw std::invalid_argument("sample_brownian_field_path: need >= 1 knot");
  FieldPath p;
  p.time_knots = time_knots;
  p.values.reserve(time_knots + 1);
  p.values.emplace_back(lat);
  const double root_dt = std::sqrt(1.0 / time_knots);
  for (int j = 1; j <= time_knots; ++j) {
    LatticeField next = p.values.back();
    add_gaussian_increment(next, root_dt, lat.alpha, rng);
    p.values.push_back(std::move(next));
  }
  return p;
}

DriftPath drift_change_of_variables(const WickTable& table, const FieldPath& y,
                                    const DriftPath* theta) {
  const int k = y.time_knots;
  if (static_cast<int>(y.values.size()) != k + 1)
    throw std::invalid_argument("drift_change_of_variables: malformed path");
  if (theta && theta->time_knots != k)
    throw std::invalid_argument("drift_change_of_variables: time-grid mismatch");
  const double dt = 1.0 / k;
  DriftPath ud;
  ud.time_knots = k;
  ud.values.reserve(k + 1); // knot samples of Upsilon-dot (trapezoid data)
  for (int j = 0; j <= k; ++j) {
    double t = j * dt;
    LatticeField v = zdot_field(y.values[j], t * table.sigma_n, table.alpha);
    if (theta) {
      // Theta-dot = <D>^{-alpha} theta, right-continuous at the last knot.
      const LatticeField& th = theta->values[std::min(j, k - 1)];
      const ModeTable& tab = v.lat.table();
      for (std::int32_t idx : tab.ball)
        v.coeffs[idx] +=
            std::pow(1.0 + tab.nsq[idx], -0.5 * table.alpha) * th.coeffs[idx];
    }
    ud.values.push_back(std::move(v));
  }
  return ud;
}

double half_halpha_energy(const WickTable& table, const DriftPath& upsilon_dot) {
  const int k = upsilon_dot.time_knots;
  const std::size_t nv = upsilon_dot.values.size();
  const double dt = 1.0 / k;
  if (nv == static_cast<std::size_t>(k) + 1) { // knot samples: trapezoid
    double acc = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
      double w = (j == 0 || j + 1 == nv) ? 0.5 : 1.0;
      acc += w * hs_sq(upsilon_dot.values[j], table.alpha);
    }
    return 0.5 * acc * dt;
  }
  if (nv == static_cast<std::size_t>(k)) { // piecewise constant: exact
    double acc = 0.0;
    for (const LatticeField& v : upsilon_dot.values)
      acc += hs_sq(v, table.alpha);
    return 0.5 * acc * dt;
  }
  throw std::invalid_argument("half_halpha_energy: malformed drift path");
}

std::vector<double> shifted_drift_identity_samples(const WickTable& table,
                                                   const DriftPath& theta,
                                                   int n_paths, RngStream& rng) {
  if (!table.alpha_n)
    throw std::logic_error("shifted_drift_identity_samples: alpha_n required");
  const Lattice lat = table.lattice();
  const int k = theta.time_knots;
  const double dt = 1.0 / k;

  // Theta(1) = sum_j dt <D>^{-alpha} theta_j and (1/2) int ||theta||^2 dt are
  // deterministic for this open-loop drift.
  LatticeField theta_one(lat);
  double half_theta_sq = 0.0;
  const ModeTable& tab = lat.table();
  for (int j = 0; j < k; ++j) {
    for (std::int32_t idx : tab.ball)
      theta_one.coeffs[idx] += dt *
                               std::pow(1.0 + tab.nsq[idx], -0.5 * table.alpha) *
                               theta.values[j].coeffs[idx];
    half_theta_sq += 0.5 * dt * l2sq_ball(theta.values[j]);
  }

  std::vector<double> out(n_paths);
  for (int i = 0; i < n_paths; ++i) {
    FieldPath y = sample_brownian_field_path(lat, k, rng);
    DriftPath ud = drift_change_of_variables(table, y, &theta);
    double lhs = half_halpha_energy(table, ud) - *table.alpha_n;
    LatticeField y3 = wick_power(y.values[k], 3, table.sigma_n);
    double rhs = pair_c(theta_one, y3) + half_theta_sq;
    out[i] = lhs - rhs;
  }
  return out;
}

double bd_objective_grad(const WickTable& table, const DriftPath& theta,
                         const std::vector<FieldPath>& paths,
                         double linear_f_coeff, DriftPath* grad_out) {
  const Lattice lat = table.lattice();
  const ModeTable& tab = lat.table();
  const int k = theta.time_knots;
  const double dt = 1.0 / k;
  const bool use_rn = linear_f_coeff == 0.0;
  const double an = use_rn && table.alpha_n ? *table.alpha_n : 0.0;
  if (use_rn && !table.alpha_n)
    throw std::logic_error("bd_objective_grad: alpha_n required for F = Rbar_diamond");

  // Theta(1): the only way the open-loop drift enters F.
  LatticeField theta_one(lat);
  double half_theta_sq = 0.0;
  for (int j = 0; j < k; ++j) {
    for (std::int32_t idx : tab.ball)
      theta_one.coeffs[idx] += dt *
                               std::pow(1.0 + tab.nsq[idx], -0.5 * table.alpha) *
                               theta.values[j].coeffs[idx];
    half_theta_sq += 0.5 * dt * l2sq_ball(theta.values[j]);
  }

  LatticeField mean_grad_f(lat); // E[grad F(Z)] over the batch
  double mean_f = 0.0;
  for (const FieldPath& p : paths) {
    LatticeField z = p.values.back();
    z += theta_one;
    if (use_rn) {
      mean_f += potential_RN_intensive(z, table) + an;
      mean_grad_f += cubic_kick(z, table); // grad of (1/4) mean H_4
    } else {
      mean_f += linear_f_coeff * z.at(0, 0, 0).real();
    }
  }
  const double np = static_cast<double>(paths.size());
  mean_f /= np;
  if (use_rn)
    mean_grad_f *= 1.0 / np;
  else
    mean_grad_f.at(0, 0, 0) = cplx(linear_f_coeff, 0.0);

  if (grad_out) {
    grad_out->time_knots = k;
    grad_out->values.assign(k, LatticeField(lat));
    for (int j = 0; j < k; ++j)
      for (std::int32_t idx : tab.ball)
        grad_out->values[j].coeffs[idx] =
            dt * (std::pow(1.0 + tab.nsq[idx], -0.5 * table.alpha) *
                      mean_grad_f.coeffs[idx] +
                  theta.values[j].coeffs[idx]);
  }
  return mean_f + half_theta_sq;
}

VariationalResult boue_dupuis_minimize(const WickTable& table,
                                       const DriftPath& init,
                                       const OptConfig& cfg, RngStream& rng,
                                       double linear_f_coeff) {
  if (init.time_knots < 1 || init.values.size() != static_cast<std::size_t>(init.time_knots))
    throw std::invalid_argument("boue_dupuis_minimize: malformed initial drift");
  const Lattice lat = table.lattice();
  const ModeTable& tab = lat.table();
  const int k = init.time_knots;

  // Common random numbers: endpoint-only paths, fixed across iterations.
  std::vector<FieldPath> batch(cfg.n_paths);
  for (FieldPath& p : batch) p = sample_brownian_field_path(lat, 1, rng);

  DriftPath theta = init;
  DriftPath grad, m1, m2;
  m1.time_knots = m2.time_knots = k;
  m1.values.assign(k, LatticeField(lat));
  m2.values.assign(k, LatticeField(lat));
  VariationalResult res;

  for (int it = 0; it < cfg.iterations; ++it) {
    double obj = bd_objective_grad(table, theta, batch, linear_f_coeff, &grad);
    if (!std::isfinite(obj))
      throw std::runtime_error("boue_dupuis_minimize: objective diverged");
    res.trace.push_back(obj);
    double bc1 = 1.0 - std::pow(cfg.beta1, it + 1);
    double bc2 = 1.0 - std::pow(cfg.beta2, it + 1);
    for (int j = 0; j < k; ++j) {
      for (std::int32_t idx : tab.ball) {
        cplx g = grad.values[j].coeffs[idx];
        cplx& m = m1.values[j].coeffs[idx];
        cplx& v = m2.values[j].coeffs[idx];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        // second moment kept per real/imag component
        double vr = cfg.beta2 * v.real() + (1.0 - cfg.beta2) * g.real() * g.real();
        double vi = cfg.beta2 * v.imag() + (1.0 - cfg.beta2) * g.imag() * g.imag();
        v = cplx(vr, vi);
        double sr = (m.real() / bc1) / (std::sqrt(vr / bc2) + 1e-12);
        double si = (m.imag() / bc1) / (std::sqrt(vi / bc2) + 1e-12);
        theta.values[j].coeffs[idx] -= cfg.lr * cplx(sr, si);
      }
    }
  }

  // Fresh evaluation batch: honest objective for the optimized drift.
  std::vector<double> per_path(cfg.n_eval_paths);
  {
    // Deterministic part once; per-path F value.
    LatticeField theta_one(lat);
    double half_theta_sq = 0.0;
    const double dt = 1.0 / k;
    for (int j = 0; j < k; ++j) {
      for (std::int32_t idx : tab.ball)
        theta_one.coeffs[idx] +=
            dt * std::pow(1.0 + tab.nsq[idx], -0.5 * table.alpha) *
            theta.values[j].coeffs[idx];
      half_theta_sq += 0.5 * dt * l2sq_ball(theta.values[j]);
    }
    const double an = linear_f_coeff == 0.0 && table.alpha_n ? *table.alpha_n : 0.0;
    for (int i = 0; i < cfg.n_eval_paths; ++i) {
      FieldPath p = sample_brownian_field_path(lat, 1, rng);
      LatticeField z = p.values.back();
      z += theta_one;
      double f = linear_f_coeff == 0.0
                     ? potential_RN_intensive(z, table) + an
                     : linear_f_coeff * z.at(0, 0, 0).real();
      per_path[i] = f + half_theta_sq;
    }
  }
  MeanSe ms = mean_se(per_path);
  res.objective = ms.mean;
  res.se = ms.se;
  res.drift = std::move(theta);
  return res;
}

} // namespace fphi
