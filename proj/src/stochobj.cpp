#include "fphi/stochobj.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fphi/stats.hpp"

namespace fphi {

int chaos_order(ObjectKind k) {
  switch (k) {
    case ObjectKind::lin: return 1;
    case ObjectKind::quad: return 2;
    case ObjectKind::cub: return 3;
    case ObjectKind::cub_int: return 3;
    case ObjectKind::quint_int: return 5;
    case ObjectKind::sept_int: return 7;
  }
  throw std::invalid_argument("chaos_order: bad kind");
}

const char* object_tag(ObjectKind k) {
  switch (k) {
    case ObjectKind::lin: return "lin";
    case ObjectKind::quad: return "quad";
    case ObjectKind::cub: return "cub";
    case ObjectKind::cub_int: return "cub_int";
    case ObjectKind::quint_int: return "quint_int";
    case ObjectKind::sept_int: return "sept_int";
  }
  throw std::invalid_argument("object_tag: bad kind");
}

namespace {

bool is_integrated(ObjectKind k) {
  return k == ObjectKind::cub_int || k == ObjectKind::quint_int ||
         k == ObjectKind::sept_int;
}

void add_state(PhaseState& a, const PhaseState& dz) {
  const ModeTable& tab = a.pos.lat.table();
  for (std::int32_t idx : tab.ball) {
    a.pos.coeffs[idx] += dz.pos.coeffs[idx];
    a.vel.coeffs[idx] += dz.vel.coeffs[idx];
  }
}

PhaseState restrict_state(const PhaseState& big, const Lattice& small) {
  PhaseState out{LatticeField(small), LatticeField(small)};
  const ModeTable& tab = small.table();
  for (std::int32_t idx : tab.ball) {
    auto n = tab.decode(idx);
    out.pos.coeffs[idx] = big.pos.at(n[0], n[1], n[2]);
    out.vel.coeffs[idx] = big.vel.at(n[0], n[1], n[2]);
  }
  return out;
}

LatticeField restrict_field(const LatticeField& big, const Lattice& small) {
  LatticeField out(small);
  const ModeTable& tab = small.table();
  for (std::int32_t idx : tab.ball) {
    auto n = tab.decode(idx);
    out.coeffs[idx] = big.at(n[0], n[1], n[2]);
  }
  return out;
}

// Composite-trapezoid Duhamel update for dz'' + dz' + <D>^{2a} z = F:
//   s_{j+1} = P s_j + (dt/2)(P e2 F_j + e2 F_{j+1}).
void duhamel_step(PhaseState& s, const ModeKernels& kern,
                  const LatticeField& f_j, const LatticeField& f_j1,
                  double dt) {
  const ModeTable& tab = s.pos.lat.table();
  for (std::int32_t idx : tab.ball) {
    const ModeKernel& k = kern.per_mode[idx];
    cplx u = s.pos.coeffs[idx], v = s.vel.coeffs[idx];
    cplx fj = f_j.coeffs[idx], fj1 = f_j1.coeffs[idx];
    s.pos.coeffs[idx] = k.p11 * u + k.p12 * v + 0.5 * dt * k.p12 * fj;
    s.vel.coeffs[idx] = k.p21 * u + k.p22 * v + 0.5 * dt * (k.p22 * fj + fj1);
  }
}

// One noise realization's worth of coupled objects, advanced step by step
// with externally supplied increments so two truncations can share a stream.
struct ObjectStreamer {
  ObjectKind kind;
  WickTable table;
  Lattice lat;
  ModeKernels kern;
  double dt;
  bool need_w2, need_30, need_320, need_70;

  PhaseState z;          // stationary stochastic convolution (pos, vel)
  LatticeField w2;       // :z^2:, band 2N
  LatticeField f30;      // pi_N :z^3:, forcing of <30>
  PhaseState s30, s320, s70;
  LatticeField f320, f70;

  ObjectStreamer(ObjectKind k, const WickTable& t, double dt_in,
                 PhaseState init_z)
      : kind(k), table(t), lat(t.lattice()),
        kern(make_mode_kernels(lat, dt_in)), dt(dt_in) {
    need_w2 = kind == ObjectKind::quad || kind == ObjectKind::quint_int;
    need_30 = is_integrated(kind);
    need_320 = kind == ObjectKind::quint_int;
    need_70 = kind == ObjectKind::sept_int;
    z = std::move(init_z);
    if (need_w2) w2 = wick_power(z.pos, 2, table.sigma_n);
    if (need_30) {
      f30 = cubic_kick(z.pos, table); // pi_N F[H_3(z)]
      s30 = PhaseState{LatticeField(lat), LatticeField(lat)};
    }
    if (need_320) {
      f320 = dealiased_product(s30.pos, w2, lat.trunc_n); // zero at t = 0
      s320 = PhaseState{LatticeField(lat), LatticeField(lat)};
    }
    if (need_70) {
      f70 = dealiased_product3(s30.pos, s30.pos, z.pos, lat.trunc_n);
      s70 = PhaseState{LatticeField(lat), LatticeField(lat)};
    }
  }

  ObjectStreamer(ObjectKind k, const WickTable& t, double dt_in, RngStream& rng)
      : ObjectStreamer(k, t, dt_in, sample_gaussian_pair(t.lattice(), rng)) {}

  void advance(const PhaseState& dz) {
    apply_propagator(z, kern);
    add_state(z, dz);
    if (need_30) {
      LatticeField f30_next = cubic_kick(z.pos, table);
      duhamel_step(s30, kern, f30, f30_next, dt);
      f30 = std::move(f30_next);
    }
    if (need_w2) w2 = wick_power(z.pos, 2, table.sigma_n);
    if (need_320) {
      LatticeField f_next = dealiased_product(s30.pos, w2, lat.trunc_n);
      duhamel_step(s320, kern, f320, f_next, dt);
      f320 = std::move(f_next);
    }
    if (need_70) {
      LatticeField f_next =
          dealiased_product3(s30.pos, s30.pos, z.pos, lat.trunc_n);
      duhamel_step(s70, kern, f70, f_next, dt);
      f70 = std::move(f_next);
    }
  }

  LatticeField value() const {
    switch (kind) {
      case ObjectKind::lin: return z.pos;
      case ObjectKind::quad: return w2;
      case ObjectKind::cub: return wick_power(z.pos, 3, table.sigma_n);
      case ObjectKind::cub_int: return s30.pos;
      case ObjectKind::quint_int: return s320.pos;
      case ObjectKind::sept_int: return s70.pos;
    }
    throw std::invalid_argument("ObjectStreamer: bad kind");
  }
};

void validate_steps(ObjectKind kind, int steps_per_unit) {
  if (steps_per_unit < 1)
    throw std::invalid_argument("build_object: steps_per_unit must be >= 1");
  if (is_integrated(kind) && steps_per_unit < 64)
    throw std::invalid_argument(
        "build_object: integrated objects need steps_per_unit >= 64 "
        "(forcing-quadrature accuracy)");
}

// Stationary shortcut for the instantaneous kinds: the object at any fixed
// time has the law of the corresponding Wick power of a mu-sample.
LatticeField stationary_sample(ObjectKind kind, const WickTable& table,
                               RngStream& rng) {
  LatticeField y = sample_position_field(table.lattice(), rng);
  switch (kind) {
    case ObjectKind::lin: return y;
    case ObjectKind::quad: return wick_power(y, 2, table.sigma_n);
    case ObjectKind::cub: return wick_power(y, 3, table.sigma_n);
    default: break;
  }
  throw std::logic_error("stationary_sample: integrated kind");
}

LatticeField object_at_time_one(ObjectKind kind, const WickTable& table,
                                int steps_per_unit, RngStream& rng) {
  if (!is_integrated(kind)) return stationary_sample(kind, table, rng);
  ObjectStreamer st(kind, table, 1.0 / steps_per_unit, rng);
  for (int j = 0; j < steps_per_unit; ++j) {
    PhaseState dz = noise_increment(st.lat, st.kern, rng);
    st.advance(dz);
  }
  return st.value();
}

// Dyadic shells on |n| (shell 0: |n| <= 1 including n = 0), restricted to
// |n| <= restrict_n, small shells merged forward; least-squares slope of
// log mean power against mean log <n>.
struct ShellFit {
  std::vector<double> log_jb, log_power;
  std::vector<double> weight; // mode count per shell
  LineFit fit;
};

// Weighted least squares with per-point weights; the spectral-slope fits
// weight each dyadic shell by its mode population so the ultraviolet
// behavior (where nearly all modes live) sets the exponent instead of the
// handful of crossover shells near the origin.
LineFit fit_line_weighted(const std::vector<double>& xs,
                          const std::vector<double>& ys,
                          const std::vector<double>& ws) {
  const std::size_t k = xs.size();
  double W = 0, xb = 0, yb = 0;
  for (std::size_t i = 0; i < k; ++i) {
    W += ws[i];
    xb += ws[i] * xs[i];
    yb += ws[i] * ys[i];
  }
  xb /= W;
  yb /= W;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += ws[i] * (xs[i] - xb) * (xs[i] - xb);
    sxy += ws[i] * (xs[i] - xb) * (ys[i] - yb);
  }
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = yb - out.slope * xb;
  double ssr = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double r = ys[i] - out.intercept - out.slope * xs[i];
    ssr += ws[i] * r * r;
  }
  out.slope_se = k > 2 ? std::sqrt(ssr / static_cast<double>(k - 2) / sxx)
                       : 0.0;
  return out;
}

ShellFit shell_fit_from_power(const ModeTable& tab,
                              const std::vector<double>& mean_power,
                              int restrict_n) {
  struct Bucket {
    long long count = 0;
    double sum_log_jb = 0.0, sum_power = 0.0;
  };
  std::vector<Bucket> buckets;
  const double rsq = static_cast<double>(restrict_n) * restrict_n + 0.5;
  for (std::int32_t idx : tab.ball) {
    double nsq = tab.nsq[idx];
    if (nsq > rsq) continue;
    int j = 0;
    double r2 = 1.0; // shell j holds 2^{j-1} < |n| <= 2^j
    while (nsq > r2 + 0.5) {
      r2 *= 4.0;
      ++j;
    }
    if (j >= static_cast<int>(buckets.size())) buckets.resize(j + 1);
    buckets[j].count += 1;
    buckets[j].sum_log_jb += 0.5 * std::log(1.0 + nsq);
    buckets[j].sum_power += mean_power[idx];
  }
  std::vector<Bucket> merged;
  for (const Bucket& b : buckets) {
    if (b.count == 0) continue;
    if (!merged.empty() && merged.back().count < 6) {
      merged.back().count += b.count;
      merged.back().sum_log_jb += b.sum_log_jb;
      merged.back().sum_power += b.sum_power;
    } else {
      merged.push_back(b);
    }
  }
  if (merged.size() >= 2 && merged.back().count < 6) {
    Bucket tail = merged.back();
    merged.pop_back();
    merged.back().count += tail.count;
    merged.back().sum_log_jb += tail.sum_log_jb;
    merged.back().sum_power += tail.sum_power;
  }
  if (merged.size() < 3)
    throw std::runtime_error("spectral-slope fit: fewer than 3 dyadic shells");
  ShellFit out;
  for (const Bucket& b : merged) {
    out.log_jb.push_back(b.sum_log_jb / static_cast<double>(b.count));
    out.log_power.push_back(std::log(b.sum_power / static_cast<double>(b.count)));
    out.weight.push_back(static_cast<double>(b.count));
  }
  out.fit = fit_line_weighted(out.log_jb, out.log_power, out.weight);
  return out;
}

} // namespace

TimeSeriesField build_object(ObjectKind kind, const WickTable& table,
                             double t_final, int steps_per_unit,
                             RngStream rng) {
  validate_steps(kind, steps_per_unit);
  const double dt = 1.0 / steps_per_unit;
  const long long n_steps = std::llround(t_final * steps_per_unit);
  ObjectStreamer st(kind, table, dt, rng);
  TimeSeriesField out;
  out.times.push_back(0.0);
  out.values.push_back(st.value());
  for (long long j = 0; j < n_steps; ++j) {
    PhaseState dz = noise_increment(st.lat, st.kern, rng);
    st.advance(dz);
    out.times.push_back(static_cast<double>(j + 1) * dt);
    out.values.push_back(st.value());
  }
  return out;
}

DecayFit fit_decay_exponent(ObjectKind kind, const WickTable& table,
                            int ensemble, RngStream& rng) {
  if (ensemble < 200)
    throw std::invalid_argument("fit_decay_exponent: ensemble must be >= 200");
  if (table.trunc_n < 8)
    throw std::invalid_argument("fit_decay_exponent: need N >= 8");
  std::vector<double> power;
  const ModeTable* vtab = nullptr;
  for (int i = 0; i < ensemble; ++i) {
    LatticeField v = object_at_time_one(kind, table, 64, rng);
    if (power.empty()) {
      power.assign(v.coeffs.size(), 0.0);
      vtab = &v.lat.table();
    }
    for (std::int32_t idx : vtab->ball) power[idx] += std::norm(v.coeffs[idx]);
  }
  for (double& p : power) p /= static_cast<double>(ensemble);
  ShellFit sf = shell_fit_from_power(*vtab, power, table.trunc_n);
  DecayFit out;
  out.exponent = sf.fit.slope;
  out.stderr_ = sf.fit.slope_se;
  out.predicted = -3.0 - 2.0 * chaos_order(kind) * (table.alpha - 1.5);
  out.shell_log_jb = std::move(sf.log_jb);
  out.shell_log_power = std::move(sf.log_power);
  return out;
}

namespace {

double hs_norm_diff(const LatticeField& big, const LatticeField& small,
                    double s) {
  const ModeTable& btab = big.lat.table();
  const double small_rsq =
      static_cast<double>(small.lat.trunc_n) * small.lat.trunc_n + 0.5;
  double acc = 0.0;
  for (std::int32_t idx : btab.ball) {
    cplx c = big.coeffs[idx];
    if (btab.nsq[idx] <= small_rsq) {
      auto n = btab.decode(idx);
      c -= small.at(n[0], n[1], n[2]);
    }
    acc += std::pow(1.0 + btab.nsq[idx], s) * std::norm(c);
  }
  return std::sqrt(acc);
}

double default_regularity(ObjectKind kind, double alpha) {
  double chaos = chaos_order(kind) * (alpha - 1.5);
  return is_integrated(kind) ? chaos + alpha : chaos;
}

} // namespace

ConvergenceRate convergence_rate(ObjectKind kind, double alpha,
                                 const std::vector<int>& n2_list, int ensemble,
                                 RngStream& rng, double s_override) {
  if (n2_list.size() < 2)
    throw std::invalid_argument("convergence_rate: need >= 2 scales");
  for (int n : n2_list)
    if (n < 2 || n % 2)
      throw std::invalid_argument("convergence_rate: scales must be even, >= 2");
  ConvergenceRate out;
  out.n2_list = n2_list;
  out.s_used = s_override < 1e8 ? s_override
                                : default_regularity(kind, alpha) - 0.25;
  const int spu = 64;
  for (int n2 : n2_list) {
    WickTable t2(alpha, n2), t1(alpha, n2 / 2);
    const Lattice lat2 = t2.lattice(), lat1 = t1.lattice();
    std::vector<double> diffs(ensemble);
    for (int i = 0; i < ensemble; ++i) {
      if (!is_integrated(kind)) {
        LatticeField y2 = sample_position_field(lat2, rng);
        LatticeField y1 = restrict_field(y2, lat1);
        LatticeField x2 = kind == ObjectKind::lin
                              ? y2
                              : wick_power(y2, chaos_order(kind), t2.sigma_n);
        LatticeField x1 = kind == ObjectKind::lin
                              ? y1
                              : wick_power(y1, chaos_order(kind), t1.sigma_n);
        diffs[i] = hs_norm_diff(x2, x1, out.s_used);
      } else {
        ObjectStreamer s2(kind, t2, 1.0 / spu, rng);
        // Shared realization: the coarse truncation consumes the restriction
        // of the same initial data and increments.
        ObjectStreamer s1(kind, t1, 1.0 / spu, restrict_state(s2.z, lat1));
        for (int j = 0; j < spu; ++j) {
          PhaseState dz2 = noise_increment(lat2, s2.kern, rng);
          PhaseState dz1 = restrict_state(dz2, lat1);
          s2.advance(dz2);
          s1.advance(dz1);
        }
        diffs[i] = hs_norm_diff(s2.value(), s1.value(), out.s_used);
      }
    }
    out.median_diff.push_back(median_of(diffs));
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n2_list.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(n2_list[i])));
    ly.push_back(std::log(out.median_diff[i]));
  }
  LineFit f = fit_line(lx, ly);
  out.gamma = -f.slope;
  out.gamma_se = f.slope_se;
  return out;
}

RemainderResult second_order_remainder(const WickTable& table, double t_final,
                                       int steps_per_unit, int ensemble,
                                       RngStream& rng) {
  validate_steps(ObjectKind::cub_int, steps_per_unit);
  const Lattice lat = table.lattice();
  const ModeTable& tab = lat.table();
  const double dt = 1.0 / steps_per_unit;
  const long long n_steps = std::llround(t_final * steps_per_unit);
  const double s_sup = table.alpha - 0.6; // alpha - 1/2 - eps, eps = 0.1

  RemainderResult out;
  out.sup_hs_v.resize(ensemble);
  std::vector<double> pow_u(tab.nsq.size(), 0.0), pow_v(tab.nsq.size(), 0.0);

  for (int i = 0; i < ensemble; ++i) {
    ObjectStreamer st(ObjectKind::cub_int, table, dt, rng);
    PhaseState u = st.z; // u(0) = <1>(0), so v(0) = 0
    auto v_field = [&]() {
      LatticeField v = u.pos;
      v -= st.z.pos;
      v += st.s30.pos;
      return v;
    };
    double sup = 0.0;
    if (i == 0) {
      out.v_series.times.push_back(0.0);
      out.v_series.values.push_back(v_field());
    }
    for (long long j = 0; j < n_steps; ++j) {
      PhaseState dz = noise_increment(lat, st.kern, rng);
      st.advance(dz);
      apply_propagator(u, st.kern);
      add_state(u, dz);
      LatticeField kick = cubic_kick(u.pos, table);
      for (std::int32_t idx : tab.ball) u.vel.coeffs[idx] -= dt * kick.coeffs[idx];
      LatticeField v = v_field();
      sup = std::max(sup, sobolev_norm(v, s_sup));
      if (i == 0) {
        out.v_series.times.push_back(static_cast<double>(j + 1) * dt);
        out.v_series.values.push_back(v);
      }
      if (j + 1 == n_steps) {
        for (std::int32_t idx : tab.ball) {
          pow_u[idx] += std::norm(u.pos.coeffs[idx]);
          pow_v[idx] += std::norm(v.coeffs[idx]);
        }
      }
    }
    out.sup_hs_v[i] = sup;
  }
  for (std::size_t i = 0; i < pow_u.size(); ++i) {
    pow_u[i] /= ensemble;
    pow_v[i] /= ensemble;
  }
  ShellFit fu = shell_fit_from_power(tab, pow_u, table.trunc_n);
  ShellFit fv = shell_fit_from_power(tab, pow_v, table.trunc_n);
  // The decay slopes compare UV regularity. At strong effective coupling the
  // lowest modes condense (the Wick-ordered cubic acts as a large negative
  // mass there), which contaminates a whole-range line fit; exclude shells
  // below a fixed infrared floor from the fit. The exported shell arrays
  // keep every shell.
  constexpr double ir_floor_jb = 3.0;
  auto tail_slope = [&](const ShellFit& sf) {
    std::vector<double> lx, ly, lw;
    for (std::size_t i = 0; i < sf.log_jb.size(); ++i) {
      if (sf.log_jb[i] >= std::log(ir_floor_jb)) {
        lx.push_back(sf.log_jb[i]);
        ly.push_back(sf.log_power[i]);
        lw.push_back(sf.weight[i]);
      }
    }
    return lx.size() >= 2 ? fit_line_weighted(lx, ly, lw).slope
                          : sf.fit.slope;
  };
  out.slope_u = tail_slope(fu);
  out.slope_v = tail_slope(fv);
  out.shell_log_jb = std::move(fu.log_jb);
  out.shell_log_power_u = std::move(fu.log_power);
  out.shell_log_power_v = std::move(fv.log_power);
  return out;
}

} // namespace fphi
