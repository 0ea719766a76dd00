#include "fphi/field.hpp"

#include <cmath>
#include <stdexcept>

namespace fphi {

namespace {
void check_compatible(const LatticeField& a, const LatticeField& b) {
  if (!(a.lat == b.lat))
    throw std::invalid_argument("field arithmetic: lattice mismatch");
}
} // namespace

LatticeField& LatticeField::operator+=(const LatticeField& o) {
  check_compatible(*this, o);
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
  return *this;
}
LatticeField& LatticeField::operator-=(const LatticeField& o) {
  check_compatible(*this, o);
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
  return *this;
}
LatticeField& LatticeField::operator*=(double s) {
  for (auto& c : coeffs) c *= s;
  return *this;
}
LatticeField operator+(LatticeField a, const LatticeField& b) { return a += b; }
LatticeField operator-(LatticeField a, const LatticeField& b) { return a -= b; }
LatticeField operator*(double s, LatticeField a) { return a *= s; }

LatticeField project(const LatticeField& f, int n_cut) {
  if (n_cut < 0) throw std::invalid_argument("project: negative cutoff");
  LatticeField out = f;
  if (n_cut >= f.lat.trunc_n) return out;
  const ModeTable& t = f.lat.table();
  const double rsq = static_cast<double>(n_cut) * n_cut + 0.5;
  for (int idx : t.ball)
    if (t.nsq[idx] > rsq) out.coeffs[idx] = cplx(0.0, 0.0);
  return out;
}

double sobolev_norm(const LatticeField& f, double s) {
  const ModeTable& t = f.lat.table();
  double acc = 0.0;
  for (int idx : t.ball)
    acc += std::pow(1.0 + t.nsq[idx], s) * std::norm(f.coeffs[idx]);
  return std::sqrt(acc);
}

double l2sq_coeff(const LatticeField& f) {
  double acc = 0.0;
  for (int idx : f.lat.table().ball) acc += std::norm(f.coeffs[idx]);
  return acc;
}

double hermitian_defect(const LatticeField& f) {
  const ModeTable& t = f.lat.table();
  double worst = 0.0;
  for (int idx : t.ball) {
    cplx d = f.coeffs[t.conj_idx[idx]] - std::conj(f.coeffs[idx]);
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

bool has_nan(const LatticeField& f) {
  for (const auto& c : f.coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return true;
  return false;
}

namespace {

// Fills one field per representative mode: scale(n) times a standard
// complex Gaussian (real/imag parts N(0,1/2) each; n = 0 real N(0,1)).
template <class ScaleFn>
void fill_gaussian(LatticeField& f, RngStream& rng, ScaleFn scale) {
  const ModeTable& t = f.lat.table();
  const double inv_sqrt2 = 0.70710678118654752440;
  for (int idx : t.ball_rep) {
    auto n = t.decode(idx);
    double s = scale(t.nsq[idx]);
    double z0, z1;
    rng.normal_pair(z0, z1);
    if (n[0] == 0 && n[1] == 0 && n[2] == 0) {
      f.coeffs[idx] = cplx(s * z0, 0.0);
    } else {
      cplx val(s * inv_sqrt2 * z0, s * inv_sqrt2 * z1);
      f.coeffs[idx] = val;
      f.coeffs[t.conj_idx[idx]] = std::conj(val);
    }
  }
}

} // namespace

LatticeField sample_position_field(const Lattice& lat, RngStream& rng) {
  LatticeField f(lat);
  const double a = lat.alpha;
  fill_gaussian(f, rng, [a](double nsq) { return std::pow(1.0 + nsq, -a / 2.0); });
  return f;
}

LatticeField sample_velocity_field(const Lattice& lat, RngStream& rng) {
  LatticeField f(lat);
  fill_gaussian(f, rng, [](double) { return 1.0; });
  return f;
}

PhaseState sample_gaussian_pair(const Lattice& lat, RngStream& rng) {
  PhaseState st{LatticeField(lat), LatticeField(lat)};
  const ModeTable& t = lat.table();
  const double a = lat.alpha;
  const double inv_sqrt2 = 0.70710678118654752440;
  for (int idx : t.ball_rep) {
    auto n = t.decode(idx);
    double sp = std::pow(1.0 + t.nsq[idx], -a / 2.0);
    double z0, z1, w0, w1;
    rng.normal_pair(z0, z1);
    rng.normal_pair(w0, w1);
    if (n[0] == 0 && n[1] == 0 && n[2] == 0) {
      st.pos.coeffs[idx] = cplx(sp * z0, 0.0);
      st.vel.coeffs[idx] = cplx(w0, 0.0);
    } else {
      cplx p(sp * inv_sqrt2 * z0, sp * inv_sqrt2 * z1);
      cplx v(inv_sqrt2 * w0, inv_sqrt2 * w1);
      st.pos.coeffs[idx] = p;
      st.pos.coeffs[t.conj_idx[idx]] = std::conj(p);
      st.vel.coeffs[idx] = v;
      st.vel.coeffs[t.conj_idx[idx]] = std::conj(v);
    }
  }
  return st;
}

} // namespace fphi
