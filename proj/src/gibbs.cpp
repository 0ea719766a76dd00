#include "fphi/gibbs.hpp"

#include <cmath>
#include <stdexcept>

namespace fphi {

namespace {


double wick_mass_of(const LatticeField& u, double sigma) {
  return torus_volume * (l2sq_coeff(u) - sigma);
}

} // namespace

ChainResult pcn_sample(const WickTable& table, const ChainConfig& cfg,
                       RngStream& rng, double potential_scale,
                       bool keep_fields) {
  if (!(cfg.pcn_beta > 0.0 && cfg.pcn_beta <= 1.0))
    throw std::invalid_argument("pcn_sample: pcn_beta must lie in (0,1]");
  if (cfg.chain_len <= cfg.burn_in || cfg.burn_in < 0 || cfg.thinning < 1)
    throw std::invalid_argument("pcn_sample: need chain_len > burn_in >= 0, thinning >= 1");

  const Lattice lat = table.lattice();
  double beta = cfg.pcn_beta;
  LatticeField u = sample_position_field(lat, rng);
  double rbar = potential_RN_intensive(u, table); // unscaled per-volume R_N

  ChainResult out;
  int accepted_post = 0, proposals_post = 0;
  int win_acc = 0, win_tot = 0;
  for (int t = 0; t < cfg.chain_len; ++t) {
    LatticeField xi = sample_position_field(lat, rng);
    LatticeField prop = std::sqrt(1.0 - beta * beta) * u;
    prop += beta * xi;
    double rbar_prop = potential_RN_intensive(prop, table);
    double log_ratio = potential_scale * (rbar - rbar_prop); // alpha_N cancels
    double uni = rng.uniform();
    bool acc = std::log(uni) < log_ratio;
    if (acc) {
      u = std::move(prop);
      rbar = rbar_prop;
    }
    if (t < cfg.burn_in) {
      if (cfg.tune_beta) {
        win_acc += acc ? 1 : 0;
        ++win_tot;
        if (win_tot == 200) { // adapt toward ~25% acceptance, burn-in only
          double rate = static_cast<double>(win_acc) / win_tot;
          beta = std::min(1.0, std::max(1e-4, beta * std::exp(rate - 0.25)));
          win_acc = win_tot = 0;
        }
      }
    } else {
      ++proposals_post;
      accepted_post += acc ? 1 : 0;
      if ((t - cfg.burn_in) % cfg.thinning == 0) {
        out.wick_mass.push_back(wick_mass_of(u, table.sigma_n));
        out.potential.push_back(torus_volume * rbar);
        if (keep_fields) out.samples.push_back(u);
      }
    }
  }
  out.accept_rate =
      proposals_post ? static_cast<double>(accepted_post) / proposals_post : 0.0;
  out.beta_final = beta;
  out.iat_mass = out.wick_mass.size() >= 4
                     ? integrated_autocorr_time(out.wick_mass)
                     : 1.0;
  return out;
}

namespace {

// Log-weights log w_i = -(Rbar(u_i) + alpha_N) for u_i ~ mu, plus the
// observable int :u^2: dx on the same draws.
void importance_draws(const WickTable& table, int n_samples, RngStream& rng,
                      std::vector<double>& logw, std::vector<double>& obs) {
  if (n_samples < 10)
    throw std::invalid_argument("importance sampling: need >= 10 draws");
  const double an = table.alpha_n ? *table.alpha_n
                                  : 0.75 * quad_conv_sum(table.alpha, table.trunc_n);
  const Lattice lat = table.lattice();
  logw.resize(n_samples);
  obs.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    LatticeField u = sample_position_field(lat, rng);
    logw[i] = -(potential_RN_intensive(u, table) + an);
    obs[i] = wick_mass_of(u, table.sigma_n);
  }
  bool any_finite = false;
  for (double v : logw) {
    if (std::isnan(v)) throw std::runtime_error("importance weight is NaN");
    if (std::isfinite(v)) any_finite = true;
  }
  if (!any_finite)
    throw std::runtime_error(
        "importance sampling: every weight underflowed (N too large for "
        "direct sampling at this alpha)");
}

} // namespace

LogZEstimate estimate_logZ_importance(const WickTable& table, int n_samples,
                                      RngStream& rng) {
  std::vector<double> logw, obs;
  importance_draws(table, n_samples, rng, logw, obs);
  return logz_from_logweights(logw, 400, rng);
}

WeightedMean importance_wick_mass(const WickTable& table, int n_samples,
                                  RngStream& rng) {
  std::vector<double> logw, obs;
  importance_draws(table, n_samples, rng, logw, obs);
  return weighted_mean_logw(logw, obs, 400, rng);
}

double singularity_A(double alpha, int n_cut) {
  return ball_symbol_sum(n_cut, 6.0 - 8.0 * alpha);
}

double singularity_B(double alpha, int n_cut) {
  if (n_cut < 2)
    throw std::invalid_argument("singularity_B: need N >= 2 (log N > 0)");
  return std::pow(std::log(static_cast<double>(n_cut)), -0.25) /
         std::sqrt(singularity_A(alpha, n_cut));
}

std::vector<SingularityStat> singularity_statistic(double alpha,
                                                   const std::vector<int>& n_list,
                                                   int ensemble, EnsembleLaw law,
                                                   RngStream& rng) {
  if (ensemble < 8)
    throw std::invalid_argument("singularity_statistic: ensemble too small");
  std::vector<SingularityStat> out;
  for (int n : n_list) {
    WickTable table(alpha, n);
    SingularityStat st;
    st.trunc_n = n;
    st.a_n = singularity_A(alpha, n);
    st.b_n = singularity_B(alpha, n);
    st.exact_var = st.b_n * st.b_n * potential_RN_variance(table);
    if (law == EnsembleLaw::gaussian_mu) {
      const Lattice lat = table.lattice();
      st.samples.resize(ensemble);
      for (int i = 0; i < ensemble; ++i) {
        LatticeField u = sample_position_field(lat, rng);
        st.samples[i] = st.b_n * potential_RN(u, table);
      }
      MeanSe ms = mean_se(st.samples);
      st.mean = ms.mean;
      st.se_mean = ms.se;
    } else {
      ChainConfig cfg;
      cfg.burn_in = 20000;
      cfg.thinning = 30;
      cfg.chain_len = cfg.burn_in + cfg.thinning * ensemble;
      ChainResult chain = pcn_sample(table, cfg, rng);
      st.samples.resize(chain.potential.size());
      for (std::size_t i = 0; i < chain.potential.size(); ++i)
        st.samples[i] = st.b_n * chain.potential[i];
      st.mean = mean_of(st.samples);
      st.se_mean = correlated_se(st.samples);
    }
    st.var = variance_of(st.samples);
    out.push_back(std::move(st));
  }
  return out;
}

} // namespace fphi
