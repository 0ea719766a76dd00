#include "fphi/fft3.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fphi {

namespace {

// One cached plan pair per grid size; FFTW planning is not thread-safe, and
// FFTW_UNALIGNED lets cached plans execute on any fftw_malloc'd buffer.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};
std::mutex plan_mutex;
std::map<int, PlanPair> plan_cache;

PlanPair get_plans(int m) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto it = plan_cache.find(m);
  if (it != plan_cache.end()) return it->second;
  std::size_t cube = static_cast<std::size_t>(m) * m * m;
  fftw_complex* buf =
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cube));
  if (!buf) throw std::bad_alloc();
  PlanPair p;
  p.fwd = fftw_plan_dft_3d(m, m, m, buf, buf, FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.bwd = fftw_plan_dft_3d(m, m, m, buf, buf, FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  plan_cache.emplace(m, p);
  return p;
}

struct GridBuffer {
  fftw_complex* data = nullptr;
  explicit GridBuffer(int m) {
    std::size_t cube = static_cast<std::size_t>(m) * m * m;
    data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cube));
    if (!data) throw std::bad_alloc();
    std::memset(data, 0, sizeof(fftw_complex) * cube);
  }
  ~GridBuffer() { fftw_free(data); }
  GridBuffer(const GridBuffer&) = delete;
  GridBuffer& operator=(const GridBuffer&) = delete;
};

inline int wrap_m(int n, int m) { return n >= 0 ? n : n + m; }

// Scatter ball coefficients into the wrapped M-grid.
void place_coeffs(const LatticeField& f, fftw_complex* grid, int m) {
  const ModeTable& t = f.lat.table();
  for (int idx : t.ball) {
    auto n = t.decode(idx);
    std::size_t g =
        (static_cast<std::size_t>(wrap_m(n[0], m)) * m + wrap_m(n[1], m)) * m +
        wrap_m(n[2], m);
    grid[g][0] = f.coeffs[idx].real();
    grid[g][1] = f.coeffs[idx].imag();
  }
}

void gather_coeffs(const fftw_complex* grid, int m, LatticeField& out,
                   double inv_cube) {
  const ModeTable& t = out.lat.table();
  for (int idx : t.ball) {
    auto n = t.decode(idx);
    std::size_t g =
        (static_cast<std::size_t>(wrap_m(n[0], m)) * m + wrap_m(n[1], m)) * m +
        wrap_m(n[2], m);
    out.coeffs[idx] = cplx(grid[g][0] * inv_cube, grid[g][1] * inv_cube);
  }
}

} // namespace

std::vector<double> field_to_grid(const LatticeField& f, int grid_m) {
  if (grid_m < 2 * f.lat.trunc_n + 1)
    throw std::invalid_argument("field_to_grid: grid smaller than band");
  GridBuffer buf(grid_m);
  place_coeffs(f, buf.data, grid_m);
  PlanPair p = get_plans(grid_m);
  fftw_execute_dft(p.bwd, buf.data, buf.data);
  std::size_t cube = static_cast<std::size_t>(grid_m) * grid_m * grid_m;
  std::vector<double> vals(cube);
  for (std::size_t i = 0; i < cube; ++i) vals[i] = buf.data[i][0];
  return vals;
}

LatticeField grid_to_field(const std::vector<double>& vals, int grid_m,
                           double alpha, int trunc_n) {
  if (grid_m < 2 * trunc_n + 1)
    throw std::invalid_argument("grid_to_field: grid smaller than band");
  GridBuffer buf(grid_m);
  std::size_t cube = static_cast<std::size_t>(grid_m) * grid_m * grid_m;
  if (vals.size() != cube)
    throw std::invalid_argument("grid_to_field: value count mismatch");
  for (std::size_t i = 0; i < cube; ++i) {
    buf.data[i][0] = vals[i];
    buf.data[i][1] = 0.0;
  }
  PlanPair p = get_plans(grid_m);
  fftw_execute_dft(p.fwd, buf.data, buf.data);
  LatticeField out(Lattice(alpha, trunc_n));
  gather_coeffs(buf.data, grid_m, out, 1.0 / static_cast<double>(cube));
  return out;
}

LatticeField dealiased_power(const LatticeField& f, int k) {
  if (k < 2) throw std::invalid_argument("dealiased_power: k must be >= 2");
  const int n = f.lat.trunc_n;
  // Output carries the full band k*n: alias images of a degree-k product
  // must clear that band, so M >= k*n (degree) + k*n (readback) + 1.
  int m = next_friendly(2 * k * n + 1);
  std::vector<double> vals = field_to_grid(f, m);
  for (double& v : vals) v = std::pow(v, k);
  return grid_to_field(vals, m, f.lat.alpha, k * n);
}

LatticeField dealiased_product(const LatticeField& a, const LatticeField& b,
                               int n_out) {
  int need = a.lat.trunc_n + b.lat.trunc_n + n_out + 1;
  int m = next_friendly(need);
  std::vector<double> va = field_to_grid(a, m);
  std::vector<double> vb = field_to_grid(b, m);
  for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vb[i];
  return grid_to_field(va, m, a.lat.alpha, n_out);
}

LatticeField dealiased_product3(const LatticeField& a, const LatticeField& b,
                                const LatticeField& c, int n_out) {
  int need = a.lat.trunc_n + b.lat.trunc_n + c.lat.trunc_n + n_out + 1;
  int m = next_friendly(need);
  std::vector<double> va = field_to_grid(a, m);
  {
    std::vector<double> vb = field_to_grid(b, m);
    for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vb[i];
  }
  {
    std::vector<double> vc = field_to_grid(c, m);
    for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vc[i];
  }
  return grid_to_field(va, m, a.lat.alpha, n_out);
}

double grid_mean_poly(const LatticeField& f, const std::vector<double>& poly) {
  int deg = static_cast<int>(poly.size()) - 1;
  int m = next_friendly(deg * f.lat.trunc_n + 1);
  if (m < 2 * f.lat.trunc_n + 1) m = next_friendly(2 * f.lat.trunc_n + 1);
  std::vector<double> vals = field_to_grid(f, m);
  double acc = 0.0;
  for (double v : vals) {
    double p = poly[deg];
    for (int j = deg - 1; j >= 0; --j) p = p * v + poly[j];
    acc += p;
  }
  return acc / static_cast<double>(vals.size());
}

} // namespace fphi
