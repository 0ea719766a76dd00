#include "fphi/dynamics.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fphi/gibbs.hpp"

namespace fphi {

namespace {

ModeKernel kernel_for(double lam, double dt, NoiseMode noise_mode) {
  // lam = <n>^{2a} >= 1, so omega = [[n]] is real and bounded below.
  const double om = std::sqrt(lam - 0.25);
  const double e = std::exp(-0.5 * dt);
  const double c = std::cos(om * dt);
  const double s = std::sin(om * dt);
  ModeKernel k{};
  k.p11 = e * (c + 0.5 * s / om);
  k.p12 = e * s / om;
  k.p21 = -e * lam * s / om;
  k.p22 = e * (c - 0.5 * s / om);
  if (noise_mode == NoiseMode::euler) {
    k.q11 = 0.0;
    k.q12 = 0.0;
    k.q22 = 2.0 * dt;
  } else {
    const double inv_lam = 1.0 / lam;
    k.q11 = inv_lam - (k.p11 * k.p11 * inv_lam + k.p12 * k.p12);
    k.q12 = -(k.p11 * k.p21 * inv_lam + k.p12 * k.p22);
    k.q22 = 1.0 - (k.p21 * k.p21 * inv_lam + k.p22 * k.p22);
  }
  const double q11 = std::max(k.q11, 0.0);
  k.l11 = std::sqrt(q11);
  k.l21 = k.l11 > 0.0 ? k.q12 / k.l11 : 0.0;
  k.l22 = std::sqrt(std::max(k.q22 - k.l21 * k.l21, 0.0));
  const double inv_rt2 = 0.70710678118654752440;
  k.h11 = k.l11 * inv_rt2;
  k.h21 = k.l21 * inv_rt2;
  k.h22 = k.l22 * inv_rt2;
  return k;
}

} // namespace

ModeKernels make_mode_kernels(const Lattice& lat, double dt,
                              NoiseMode noise_mode) {
  const ModeTable& tab = lat.table();
  ModeKernels ks;
  ks.alpha = lat.alpha;
  ks.dt = dt;
  ks.trunc_n = lat.trunc_n;
  ks.per_mode.resize(static_cast<std::size_t>(tab.side) * tab.side * tab.side);
  std::map<long long, ModeKernel> by_nsq;
  for (std::int32_t idx : tab.ball) {
    long long r = static_cast<long long>(tab.nsq[idx]);
    auto it = by_nsq.find(r);
    if (it == by_nsq.end()) {
      double lam = std::pow(1.0 + static_cast<double>(r), lat.alpha);
      it = by_nsq.emplace(r, kernel_for(lam, dt, noise_mode)).first;
    }
    ks.per_mode[idx] = it->second;
  }
  return ks;
}

PhaseState linear_propagate(const PhaseState& state, double dt) {
  const ModeTable& tab = state.pos.lat.table();
  PhaseState out = state;
  for (std::int32_t idx : tab.ball) {
    double lam = std::pow(1.0 + tab.nsq[idx], state.pos.lat.alpha);
    ModeKernel k = kernel_for(lam, dt, NoiseMode::exact_covariance);
    cplx u = state.pos.coeffs[idx], v = state.vel.coeffs[idx];
    out.pos.coeffs[idx] = k.p11 * u + k.p12 * v;
    out.vel.coeffs[idx] = k.p21 * u + k.p22 * v;
  }
  return out;
}

PhaseState noise_increment(const Lattice& lat, const ModeKernels& kern,
                           RngStream& rng) {
  const ModeTable& tab = lat.table();
  PhaseState dz{LatticeField(lat), LatticeField(lat)};
  for (std::int32_t idx : tab.ball_rep) {
    const ModeKernel& k = kern.per_mode[idx];
    double z0, z1;
    rng.normal_pair(z0, z1);
    if (tab.nsq[idx] == 0.0) {
      dz.pos.coeffs[idx] = cplx(k.l11 * z0, 0.0);
      dz.vel.coeffs[idx] = cplx(k.l21 * z0 + k.l22 * z1, 0.0);
      continue;
    }
    double w0, w1;
    rng.normal_pair(w0, w1);
    cplx du(k.h11 * z0, k.h11 * w0);
    cplx dv(k.h21 * z0 + k.h22 * z1, k.h21 * w0 + k.h22 * w1);
    dz.pos.coeffs[idx] = du;
    dz.vel.coeffs[idx] = dv;
    std::int32_t cj = tab.conj_idx[idx];
    dz.pos.coeffs[cj] = std::conj(du);
    dz.vel.coeffs[cj] = std::conj(dv);
  }
  return dz;
}

PhaseState noise_increment(const Lattice& lat, double dt, RngStream& rng) {
  return noise_increment(lat, make_mode_kernels(lat, dt), rng);
}

void apply_propagator(PhaseState& state, const ModeKernels& kern) {
  const ModeTable& tab = state.pos.lat.table();
  for (std::int32_t idx : tab.ball) {
    const ModeKernel& k = kern.per_mode[idx];
    cplx u = state.pos.coeffs[idx], v = state.vel.coeffs[idx];
    state.pos.coeffs[idx] = k.p11 * u + k.p12 * v;
    state.vel.coeffs[idx] = k.p21 * u + k.p22 * v;
  }
}

void linear_noise_substep(PhaseState& state, const ModeKernels& kern,
                          RngStream& rng) {
  const ModeTable& tab = state.pos.lat.table();
  if (kern.trunc_n != tab.trunc_n)
    throw std::invalid_argument("linear_noise_substep: kernel/lattice mismatch");
  for (std::int32_t idx : tab.ball_rep) {
    const ModeKernel& k = kern.per_mode[idx];
    cplx u = state.pos.coeffs[idx], v = state.vel.coeffs[idx];
    cplx pu = k.p11 * u + k.p12 * v;
    cplx pv = k.p21 * u + k.p22 * v;
    double z0, z1;
    rng.normal_pair(z0, z1);
    if (tab.nsq[idx] == 0.0) {
      state.pos.coeffs[idx] = pu + cplx(k.l11 * z0, 0.0);
      state.vel.coeffs[idx] = pv + cplx(k.l21 * z0 + k.l22 * z1, 0.0);
      continue;
    }
    double w0, w1;
    rng.normal_pair(w0, w1);
    pu += cplx(k.h11 * z0, k.h11 * w0);
    pv += cplx(k.h21 * z0 + k.h22 * z1, k.h21 * w0 + k.h22 * w1);
    state.pos.coeffs[idx] = pu;
    state.vel.coeffs[idx] = pv;
    std::int32_t cj = tab.conj_idx[idx];
    state.pos.coeffs[cj] = std::conj(pu);
    state.vel.coeffs[cj] = std::conj(pv);
  }
}

LatticeField cubic_kick(const LatticeField& u, const WickTable& table) {
  const int n = u.lat.trunc_n;
  const int m = std::max(u.lat.grid_m, next_friendly(4 * n + 1));
  std::vector<double> vals = field_to_grid(u, m);
  const double s3 = 3.0 * table.sigma_n;
  for (double& x : vals) x = x * x * x - s3 * x;
  return grid_to_field(vals, m, u.lat.alpha, n);
}

namespace {

void add_scaled(LatticeField& dst, double w, const LatticeField& src) {
  const ModeTable& tab = dst.lat.table();
  for (std::int32_t idx : tab.ball) dst.coeffs[idx] += w * src.coeffs[idx];
}

void check_finite(const PhaseState& state, double t_now) {
  if (has_nan(state.pos) || has_nan(state.vel)) {
    std::ostringstream os;
    os << "flow diverged (NaN/inf) at t = " << t_now;
    throw std::runtime_error(os.str());
  }
}

} // namespace

void step_flow(PhaseState& state, const ModeKernels& kern, const KickFn& kick,
               const StepScheme& scheme, RngStream& rng, double t_now) {
  const double dt = scheme.dt;
  if (scheme.splitting == Splitting::lie) {
    linear_noise_substep(state, kern, rng);
    if (kick) add_scaled(state.vel, -dt, kick(state.pos));
  } else {
    if (kick) add_scaled(state.vel, -0.5 * dt, kick(state.pos));
    linear_noise_substep(state, kern, rng);
    if (kick) add_scaled(state.vel, -0.5 * dt, kick(state.pos));
  }
  check_finite(state, t_now + dt);
}

void step_truncated_cubic(PhaseState& state, const WickTable& table,
                          const ModeKernels& kern, const StepScheme& scheme,
                          RngStream& rng, double t_now) {
  KickFn kick = [&table](const LatticeField& u) { return cubic_kick(u, table); };
  step_flow(state, kern, kick, scheme, rng, t_now);
}

void step_reference_dagger(PhaseState& state, const WickTable& table,
                           double kappa, double a2bar, const ModeKernels& kern,
                           const StepScheme& scheme, RngStream& rng,
                           double t_now) {
  KickFn kick = [&table, kappa, a2bar](const LatticeField& u) {
    LatticeField k = cubic_kick(u, table);
    k *= 4.0 * a2bar;
    add_scaled(k, kappa, u);
    return k;
  };
  step_flow(state, kern, kick, scheme, rng, t_now);
}

double flow_energy(const PhaseState& state, const WickTable& table) {
  const ModeTable& tab = state.pos.lat.table();
  const double a = state.pos.lat.alpha;
  double quad = 0.0;
  for (std::int32_t idx : tab.ball) {
    double lam = std::pow(1.0 + tab.nsq[idx], a);
    quad += std::norm(state.vel.coeffs[idx]) +
            lam * std::norm(state.pos.coeffs[idx]);
  }
  const double s = table.sigma_n;
  double quart =
      grid_mean_poly(state.pos, {3.0 * s * s, 0.0, -6.0 * s, 0.0, 1.0});
  return 0.5 * quad + 0.25 * quart;
}

namespace {

double eval_observable(const std::string& name, const PhaseState& st,
                       const WickTable& table) {
  if (name == "wick_mass")
    return torus_volume * (l2sq_coeff(st.pos) - table.sigma_n);
  if (name == "p2_l2sq") return l2sq_coeff(project(st.pos, 2));
  if (name == "p4_l2sq") return l2sq_coeff(project(st.pos, 4));
  if (name == "re_u_100") return st.pos.at(1, 0, 0).real();
  if (name == "vel_l2sq") return l2sq_coeff(st.vel);
  throw std::invalid_argument("unknown observable: " + name);
}

} // namespace

InvarianceReport invariance_experiment(const WickTable& table,
                                       const StepScheme& scheme, double t_final,
                                       int ensemble_size,
                                       const std::vector<std::string>& observables,
                                       RngStream& rng, bool wick_on,
                                       double potential_scale) {
  if (ensemble_size < 2)
    throw std::invalid_argument("invariance_experiment: ensemble too small");
  const Lattice lat = table.lattice();
  InvarianceReport rep;

  // Initial ensemble from the tilted measure (positions) times the Gaussian
  // velocity marginal; potential_scale = 0 short-circuits to iid mu-pairs.
  std::vector<PhaseState> members;
  members.reserve(ensemble_size);
  if (potential_scale == 0.0) {
    for (int i = 0; i < ensemble_size; ++i)
      members.push_back(sample_gaussian_pair(lat, rng));
    rep.accept_rate = 1.0;
  } else {
    ChainConfig cfg;
    cfg.burn_in = 20000;
    cfg.thinning = 30;
    cfg.chain_len = cfg.burn_in + cfg.thinning * ensemble_size;
    ChainResult chain = pcn_sample(table, cfg, rng, potential_scale, true);
    rep.accept_rate = chain.accept_rate;
    for (int i = 0; i < ensemble_size; ++i) {
      PhaseState st;
      st.pos = chain.samples[i];
      st.vel = sample_velocity_field(lat, rng);
      members.push_back(std::move(st));
    }
  }

  // Kick matching the sampled density: potential_scale * H_3 (sigma zeroed
  // for the broken-renormalization control).
  WickTable kick_table = table;
  if (!wick_on) kick_table.sigma_n = 0.0;
  KickFn kick;
  if (potential_scale != 0.0) {
    double ps = potential_scale;
    kick = [&kick_table, ps](const LatticeField& u) {
      LatticeField k = cubic_kick(u, kick_table);
      if (ps != 1.0) k *= ps;
      return k;
    };
  }

  ModeKernels kern = make_mode_kernels(lat, scheme.dt, scheme.noise_mode);
  const long long n_steps = std::llround(t_final / scheme.dt);

  std::vector<std::vector<double>> at0(observables.size()),
      atT(observables.size());
  for (PhaseState& st : members) {
    std::vector<double> row0(observables.size());
    for (std::size_t j = 0; j < observables.size(); ++j)
      row0[j] = eval_observable(observables[j], st, table);
    bool ok = true;
    for (long long k = 0; k < n_steps; ++k) {
      try {
        step_flow(st, kern, kick, scheme, rng,
                  static_cast<double>(k) * scheme.dt);
      } catch (const std::runtime_error&) {
        rep.any_nan = true;
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < observables.size(); ++j) {
      at0[j].push_back(row0[j]);
      atT[j].push_back(eval_observable(observables[j], st, table));
    }
  }

  RngStream boot(rng.master_seed, rng.stream_id + 1000003);
  for (std::size_t j = 0; j < observables.size(); ++j) {
    InvarianceRow row;
    row.observable = observables[j];
    if (at0[j].size() < 2) {
      row.mean0 = row.se0 = row.mean_t = row.se_t = 0.0;
      row.p_value = 0.0;
      rep.rows.push_back(row);
      continue;
    }
    std::vector<double> diff(at0[j].size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = atT[j][i] - at0[j][i];
    int bl = static_cast<int>(
        std::min(std::max(1.0, std::ceil(integrated_autocorr_time(diff))),
                 static_cast<double>(diff.size() / 4 + 1)));
    row.mean0 = mean_of(at0[j]);
    row.se0 = block_bootstrap_se(at0[j], bl, 400, boot);
    row.mean_t = mean_of(atT[j]);
    row.se_t = block_bootstrap_se(atT[j], bl, 400, boot);
    row.p_value = block_bootstrap_pvalue(diff, bl, 2000, boot);
    rep.rows.push_back(row);
  }
  return rep;
}

} // namespace fphi
