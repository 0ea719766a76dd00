#pragma once

#include "fphi/stats.hpp"
#include "fphi/wick.hpp"

namespace fphi {

struct ChainConfig {
  double pcn_beta = 0.25;  // proposal mixing in (0,1]
  int burn_in = 1000;
  int thinning = 10;
  int chain_len = 11000;   // total steps including burn-in
  bool tune_beta = true;   // adapt toward 25% acceptance during burn-in only
};

struct ChainResult {
  std::vector<LatticeField> samples;    // post burn-in, thinned
  std::vector<double> wick_mass;        // int :u^2: dx per kept sample
  std::vector<double> potential;        // R_N(u) per kept sample
  double accept_rate = 0.0;             // post burn-in
  double beta_final = 0.0;
  double iat_mass = 1.0;                // of the kept wick-mass series
};

// Markov chain for d rho_N = Z^{-1} e^{-Rbar_N^{diamond}(u)} d mu(u) via the
// preconditioned Crank-Nicolson proposal u' = sqrt(1-b^2) u + b xi, xi ~ mu,
// accepted with probability min(1, e^{Rbar(u) - Rbar(u')}) where Rbar is the
// per-volume potential R_N/(2pi)^3 (+ alpha_N, which cancels in the ratio).
// potential_scale multiplies Rbar (0 gives the pure Gaussian reference).
ChainResult pcn_sample(const WickTable& table, const ChainConfig& cfg,
                       RngStream& rng, double potential_scale = 1.0,
                       bool keep_fields = false);

// log Z^{diamond} = log E_mu[e^{-Rbar^{diamond}(u)}] from n_samples direct
// Gaussian draws; bootstrap standard error. Throws std::runtime_error when
// every weight underflows (all log-weights are -inf).
LogZEstimate estimate_logZ_importance(const WickTable& table, int n_samples,
                                      RngStream& rng);

// Importance estimate of E_rho[int :u^2: dx] from the same weights.
WeightedMean importance_wick_mass(const WickTable& table, int n_samples,
                                  RngStream& rng);

// ---- singularity diagnostic ----

// A_N = sum_{|n|<=N} <n>^{6-8a};  B_N = (log N)^{-1/4} A_N^{-1/2}.
double singularity_A(double alpha, int n_cut);
double singularity_B(double alpha, int n_cut);

struct SingularityStat {
  int trunc_n = 0;
  double a_n = 0.0;
  double b_n = 0.0;
  std::vector<double> samples;   // B_N R_N values
  double mean = 0.0, var = 0.0;  // of the samples
  double se_mean = 0.0;
  double exact_var = 0.0;        // B_N^2 Var_mu(R_N), exact (mu ensembles)
};

enum class EnsembleLaw { gaussian_mu, gibbs_rho };

// Empirical law of B_N R_N under mu (direct sampling) or rho_N (pCN chain)
// for each N in n_list.
std::vector<SingularityStat> singularity_statistic(double alpha,
                                                   const std::vector<int>& n_list,
                                                   int ensemble, EnsembleLaw law,
                                                   RngStream& rng);

} // namespace fphi
