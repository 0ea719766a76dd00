#include "fphi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fphi {

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty sample");
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance_of: need >= 2 points");
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  r.mean = mean_of(xs);
  r.se = xs.size() > 1
             ? std::sqrt(variance_of(xs) / static_cast<double>(xs.size()))
             : 0.0;
  return r;
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median_of: empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double integrated_autocorr_time(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 4) return 1.0;
  const double m = mean_of(xs);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = xs[i] - m;
  double c0 = 0.0;
  for (double v : d) c0 += v * v;
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += d[i] * d[i + k];
    ck /= static_cast<double>(n);
    tau += 2.0 * ck / c0;
    if (static_cast<double>(k) >= 5.0 * tau) break; // Sokal window c = 5
  }
  return std::max(tau, 1.0);
}

double correlated_se(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double tau = integrated_autocorr_time(xs);
  return std::sqrt(variance_of(xs) * tau / static_cast<double>(xs.size()));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matched points");
  const double n = static_cast<double>(x.size());
  double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    ss_res += r * r;
  }
  f.slope_se = x.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
  return f;
}

LineFit fit_growth_exponent(const std::vector<double>& ns,
                            const std::vector<double>& xs) {
  if (ns.size() != xs.size() || ns.size() < 3)
    throw std::invalid_argument("fit_growth_exponent: need >= 3 dyadic points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    if (std::abs(ns[i + 1] - 2.0 * ns[i]) > 1e-9 * ns[i + 1])
      throw std::invalid_argument("fit_growth_exponent: scales must be dyadic");
    double d = xs[i + 1] - xs[i];
    if (d <= 0.0)
      throw std::invalid_argument("fit_growth_exponent: increments must grow");
    lx.push_back(std::log(ns[i]));
    ly.push_back(std::log(d));
  }
  return fit_line(lx, ly);
}

namespace {

// Circular-block bootstrap replicate of the mean.
double block_replicate(const std::vector<double>& xs, int block_len,
                       RngStream& rng) {
  const std::size_t n = xs.size();
  const int nb = static_cast<int>((n + block_len - 1) / block_len);
  double acc = 0.0;
  std::size_t taken = 0;
  for (int b = 0; b < nb && taken < n; ++b) {
    std::size_t start =
        static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    if (start >= n) start = n - 1;
    for (int j = 0; j < block_len && taken < n; ++j, ++taken)
      acc += xs[(start + j) % n];
  }
  return acc / static_cast<double>(n);
}

} // namespace

double block_bootstrap_pvalue(const std::vector<double>& xs, int block_len,
                              int n_boot, RngStream& rng) {
  if (xs.size() < 2) return 1.0;
  if (block_len < 1) block_len = 1;
  const double m0 = mean_of(xs);
  std::vector<double> centered(xs);
  for (double& v : centered) v -= m0;
  int hits = 0;
  for (int b = 0; b < n_boot; ++b) {
    double r = block_replicate(centered, block_len, rng);
    if (std::abs(r) >= std::abs(m0)) ++hits;
  }
  return (hits + 1.0) / (n_boot + 1.0);
}

double block_bootstrap_se(const std::vector<double>& xs, int block_len,
                          int n_boot, RngStream& rng) {
  if (xs.size() < 2) return 0.0;
  if (block_len < 1) block_len = 1;
  std::vector<double> reps(n_boot);
  for (int b = 0; b < n_boot; ++b) reps[b] = block_replicate(xs, block_len, rng);
  return std::sqrt(variance_of(reps));
}

namespace {

double log_mean_exp(const std::vector<double>& lw) {
  double mx = lw[0];
  for (double v : lw) mx = std::max(mx, v);
  double acc = 0.0;
  for (double v : lw) acc += std::exp(v - mx);
  return mx + std::log(acc / static_cast<double>(lw.size()));
}

} // namespace

LogZEstimate logz_from_logweights(const std::vector<double>& logw, int n_boot,
                                  RngStream& rng) {
  if (logw.empty())
    throw std::invalid_argument("logz_from_logweights: empty sample");
  LogZEstimate est;
  est.logz = log_mean_exp(logw);
  double mx = logw[0];
  for (double v : logw) mx = std::max(mx, v);
  double s1 = 0.0, s2 = 0.0;
  for (double v : logw) {
    double w = std::exp(v - mx);
    s1 += w;
    s2 += w * w;
  }
  est.ess = s1 * s1 / s2;
  const std::size_t n = logw.size();
  std::vector<double> reps(n_boot);
  std::vector<double> draw(n);
  for (int b = 0; b < n_boot; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j =
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      if (j >= n) j = n - 1;
      draw[i] = logw[j];
    }
    reps[b] = log_mean_exp(draw);
  }
  est.se = n_boot > 1 ? std::sqrt(variance_of(reps)) : 0.0;
  return est;
}

WeightedMean weighted_mean_logw(const std::vector<double>& logw,
                                const std::vector<double>& obs, int n_boot,
                                RngStream& rng) {
  if (logw.size() != obs.size() || logw.empty())
    throw std::invalid_argument("weighted_mean_logw: need matched samples");
  const std::size_t n = logw.size();
  double mx = logw[0];
  for (double v : logw) mx = std::max(mx, v);
  auto ratio = [&](const std::vector<std::size_t>& idx) {
    double num = 0.0, den = 0.0;
    for (std::size_t i : idx) {
      double w = std::exp(logw[i] - mx);
      num += w * obs[i];
      den += w;
    }
    return num / den;
  };
  std::vector<std::size_t> full(n);
  for (std::size_t i = 0; i < n; ++i) full[i] = i;
  WeightedMean r;
  r.mean = ratio(full);
  double s1 = 0.0, s2 = 0.0;
  for (double v : logw) {
    double w = std::exp(v - mx);
    s1 += w;
    s2 += w * w;
  }
  r.ess = s1 * s1 / s2;
  std::vector<double> reps(n_boot);
  std::vector<std::size_t> idx(n);
  for (int b = 0; b < n_boot; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j =
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      idx[i] = j >= n ? n - 1 : j;
    }
    reps[b] = ratio(idx);
  }
  r.se = n_boot > 1 ? std::sqrt(variance_of(reps)) : 0.0;
  return r;
}

} // namespace fphi
