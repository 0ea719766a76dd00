#include "fphi/counting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fphi/lattice.hpp"

namespace fphi {

std::vector<std::array<int, 3>> dyadic_shell(int n_scale) {
  if (n_scale < 1) throw std::invalid_argument("dyadic_shell: scale must be >= 1");
  const double hi = static_cast<double>(n_scale) * n_scale + 0.5;
  const double lo = n_scale == 1 ? -0.5 : 0.25 * n_scale * n_scale + 0.5;
  std::vector<std::array<int, 3>> out;
  for (int n1 = -n_scale; n1 <= n_scale; ++n1)
    for (int n2 = -n_scale; n2 <= n_scale; ++n2)
      for (int n3 = -n_scale; n3 <= n_scale; ++n3) {
        double r = static_cast<double>(n1) * n1 + static_cast<double>(n2) * n2 +
                   static_cast<double>(n3) * n3;
        if (r < hi && r > lo) out.push_back({n1, n2, n3});
      }
  return out;
}

namespace {

void validate_sign(int s, const char* what) {
  if (s != 1 && s != -1)
    throw std::invalid_argument(std::string(what) + ": signs must be +-1");
}

// Sup over the zeta grid (spacing step, covering the attainable range) of
// the count / weighted mass in the unit window |phi - zeta| <= 1. phis must
// be sorted; weights (optional) aligned with phis.
struct WindowSup {
  std::int64_t count = 0;
  double weighted = 0.0;
  double zeta = 0.0;
};

WindowSup window_sup(const std::vector<double>& phis,
                     const std::vector<double>& prefix_w, double step) {
  WindowSup best;
  if (phis.empty()) return best;
  const double lo = std::floor(phis.front()) - 1.0;
  const double hi = std::ceil(phis.back()) + 1.0;
  const long long n_grid = std::llround((hi - lo) / step);
  for (long long g = 0; g <= n_grid; ++g) {
    double zeta = lo + static_cast<double>(g) * step;
    auto first = std::lower_bound(phis.begin(), phis.end(), zeta - 1.0);
    auto last = std::upper_bound(phis.begin(), phis.end(), zeta + 1.0);
    std::int64_t cnt = last - first;
    double wsum = 0.0;
    if (!prefix_w.empty())
      wsum = prefix_w[last - phis.begin()] - prefix_w[first - phis.begin()];
    bool better = prefix_w.empty() ? cnt > best.count : wsum > best.weighted;
    if (better) {
      best.count = cnt;
      best.weighted = wsum;
      best.zeta = zeta;
    }
  }
  return best;
}

} // namespace

BoundReport count_basic(const CountingQuery& q, double zeta_step) {
  validate_sign(q.sign, "count_basic");
  if (q.n_scale < 1 || q.a_scale < 1)
    throw std::invalid_argument("count_basic: scales must be >= 1");
  std::vector<double> phis;
  for (const auto& n : dyadic_shell(q.n_scale)) {
    std::array<int, 3> an{q.shift[0] + n[0], q.shift[1] + n[1],
                          q.shift[2] + n[2]};
    phis.push_back(bracket_symbol(an, q.alpha) +
                   q.sign * bracket_symbol(n, q.alpha));
  }
  std::sort(phis.begin(), phis.end());
  WindowSup sup = window_sup(phis, {}, zeta_step);
  BoundReport rep;
  rep.observed_sup_count = sup.count;
  rep.sup_zeta = sup.zeta;
  rep.bound_value = std::pow(static_cast<double>(q.n_scale), 3) /
                    std::min(q.a_scale, q.n_scale);
  rep.ratio = static_cast<double>(sup.count) / rep.bound_value;
  return rep;
}

BoundReport count_two_balls(const CountingQuery& q, double zeta_step) {
  validate_sign(q.sign, "count_two_balls");
  if (q.n_scale < 1 || q.a_scale < 1 || q.b_scale < 1)
    throw std::invalid_argument("count_two_balls: scales must be >= 1");
  const double b_hi = static_cast<double>(q.b_scale) * q.b_scale + 0.5;
  const double b_lo =
      q.b_scale == 1 ? -0.5 : 0.25 * q.b_scale * q.b_scale + 0.5;
  std::vector<double> phis;
  for (const auto& n : dyadic_shell(q.n_scale)) {
    std::array<int, 3> an{q.shift[0] + n[0], q.shift[1] + n[1],
                          q.shift[2] + n[2]};
    double r = static_cast<double>(an[0]) * an[0] +
               static_cast<double>(an[1]) * an[1] +
               static_cast<double>(an[2]) * an[2];
    if (!(r < b_hi && r > b_lo)) continue;
    phis.push_back(bracket_symbol(an, q.alpha) +
                   q.sign * bracket_symbol(n, q.alpha));
  }
  std::sort(phis.begin(), phis.end());
  WindowSup sup = window_sup(phis, {}, zeta_step);
  BoundReport rep;
  rep.observed_sup_count = sup.count;
  rep.sup_zeta = sup.zeta;
  int mn = std::min(q.b_scale, q.n_scale);
  rep.bound_value = std::pow(static_cast<double>(mn), 3) /
                    std::min(q.a_scale, mn);
  rep.ratio = static_cast<double>(sup.count) / rep.bound_value;
  return rep;
}

namespace {

// All triple phases kappa = eps0 [[n1+n2+n3]] + sum_j eps_j [[n_j]] with an
// optional weight, sorted by phase.
void triple_phases(double alpha, const std::array<int, 3>& n_scales,
                   const std::array<int, 4>& signs, bool weighted, double s,
                   std::vector<double>& phis, std::vector<double>& weights) {
  for (int n : n_scales)
    if (n < 1 || n > 4)
      throw std::invalid_argument(
          "triple counting: shell scales must lie in [1,4] (enumeration budget)");
  validate_sign(signs[0], "triple counting");
  for (int j = 1; j < 4; ++j) validate_sign(signs[j], "triple counting");
  auto s1 = dyadic_shell(n_scales[0]);
  auto s2 = dyadic_shell(n_scales[1]);
  auto s3 = dyadic_shell(n_scales[2]);
  std::vector<double> b1(s1.size()), b2(s2.size()), b3(s3.size());
  for (std::size_t i = 0; i < s1.size(); ++i) b1[i] = bracket_symbol(s1[i], alpha);
  for (std::size_t i = 0; i < s2.size(); ++i) b2[i] = bracket_symbol(s2[i], alpha);
  for (std::size_t i = 0; i < s3.size(); ++i) b3[i] = bracket_symbol(s3[i], alpha);
  phis.reserve(s1.size() * s2.size() * s3.size());
  if (weighted) weights.reserve(phis.capacity());
  for (std::size_t i = 0; i < s1.size(); ++i)
    for (std::size_t j = 0; j < s2.size(); ++j)
      for (std::size_t k = 0; k < s3.size(); ++k) {
        std::array<int, 3> m{s1[i][0] + s2[j][0] + s3[k][0],
                             s1[i][1] + s2[j][1] + s3[k][1],
                             s1[i][2] + s2[j][2] + s3[k][2]};
        double kap = signs[0] * bracket_symbol(m, alpha) + signs[1] * b1[i] +
                     signs[2] * b2[j] + signs[3] * b3[k];
        phis.push_back(kap);
        if (weighted) {
          double w = std::pow(b1[i] * b2[j] * b3[k], -2.0) *
                     std::pow(jb2(m[0], m[1], m[2]), s - alpha);
          weights.push_back(w);
        }
      }
  if (weighted) {
    // sort phases and weights together
    std::vector<std::size_t> order(phis.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&phis](std::size_t a, std::size_t b) { return phis[a] < phis[b]; });
    std::vector<double> ps(phis.size()), ws(phis.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      ps[i] = phis[order[i]];
      ws[i] = weights[order[i]];
    }
    phis = std::move(ps);
    weights = std::move(ws);
  } else {
    std::sort(phis.begin(), phis.end());
  }
}

} // namespace

BoundReport count_phase_k3(double alpha, const std::array<int, 3>& n_scales,
                           const std::array<int, 4>& signs, double zeta_step) {
  std::vector<double> phis, weights;
  triple_phases(alpha, n_scales, signs, false, 0.0, phis, weights);
  WindowSup sup = window_sup(phis, {}, zeta_step);
  std::array<int, 3> sorted = n_scales;
  std::sort(sorted.begin(), sorted.end());
  BoundReport rep;
  rep.observed_sup_count = sup.count;
  rep.sup_zeta = sup.zeta;
  rep.bound_value = std::pow(static_cast<double>(n_scales[0]) * n_scales[1] *
                                 n_scales[2],
                             3) /
                    sorted[1]; // second-largest scale
  rep.ratio = static_cast<double>(sup.count) / rep.bound_value;
  return rep;
}

BoundReport weighted_sum_k3(double alpha, double s,
                            const std::array<int, 3>& n_scales,
                            const std::array<int, 4>& signs, double zeta_step) {
  if (s < alpha - 1.0)
    throw std::invalid_argument("weighted_sum_k3: requires s >= alpha - 1");
  std::vector<double> phis, weights;
  triple_phases(alpha, n_scales, signs, true, s, phis, weights);
  std::vector<double> prefix(phis.size() + 1, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i)
    prefix[i + 1] = prefix[i] + weights[i];
  WindowSup sup = window_sup(phis, prefix, zeta_step);
  const int n_max = std::max({n_scales[0], n_scales[1], n_scales[2]});
  BoundReport rep;
  rep.observed_sup_count = sup.count;
  rep.sup_zeta = sup.zeta;
  rep.weighted_sum = sup.weighted;
  rep.bound_value =
      std::pow(static_cast<double>(n_max), 2.0 * s - 6.0 * alpha + 6.0);
  rep.ratio = sup.weighted / rep.bound_value;
  return rep;
}

} // namespace fphi
