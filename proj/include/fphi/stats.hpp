#pragma once

#include <cstdint>
#include <vector>

#include "fphi/rng.hpp"

namespace fphi {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

double mean_of(const std::vector<double>& xs);
double variance_of(const std::vector<double>& xs); // unbiased
MeanSe mean_se(const std::vector<double>& xs);     // iid standard error
double median_of(std::vector<double> xs);

// Integrated autocorrelation time with Sokal's self-consistent window
// (tau = 1 + 2 sum rho_k, window c = 5). At least 1.
double integrated_autocorr_time(const std::vector<double>& xs);

// Standard error of the mean of a correlated series: sqrt(var * tau / n).
double correlated_se(const std::vector<double>& xs);

// Ordinary least squares y ~ a + b x; returns slope b, its standard error,
// and intercept a.
struct LineFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Growth exponent of a sequence x_N ~ a N^e + C sampled at dyadic N:
// slope of log(x_{2N} - x_N) against log N (removes the offset C, which
// dominates naive log-log fits at small N).
LineFit fit_growth_exponent(const std::vector<double>& ns,
                            const std::vector<double>& xs);

// Two-sided bootstrap p-value for mean(xs) == 0 using circular block
// resampling (honest under serial correlation of chain-derived members).
double block_bootstrap_pvalue(const std::vector<double>& xs, int block_len,
                              int n_boot, RngStream& rng);

// Bootstrap standard error of mean(xs) with circular blocks.
double block_bootstrap_se(const std::vector<double>& xs, int block_len,
                          int n_boot, RngStream& rng);

// Importance-sampling estimators from log-weights. Honest errors: bootstrap
// over (log-weight, observable) pairs (the delta method collapses when a
// single weight dominates).
struct LogZEstimate {
  double logz = 0.0;
  double se = 0.0;
  double ess = 0.0; // effective sample size (sum w)^2 / sum w^2
};
LogZEstimate logz_from_logweights(const std::vector<double>& logw, int n_boot,
                                  RngStream& rng);

struct WeightedMean {
  double mean = 0.0;
  double se = 0.0;
  double ess = 0.0;
};
WeightedMean weighted_mean_logw(const std::vector<double>& logw,
                                const std::vector<double>& obs, int n_boot,
                                RngStream& rng);

} // namespace fphi
