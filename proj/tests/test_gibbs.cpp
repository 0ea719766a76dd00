#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fphi/gibbs.hpp"
#include "fphi/variational.hpp"

using namespace fphi;

namespace {

double wick_mass_obs(const LatticeField& u, double sigma) {
  return torus_volume * (l2sq_coeff(u) - sigma);
}

DriftPath zero_drift(const Lattice& lat, int knots) {
  DriftPath d;
  d.time_knots = knots;
  d.values.assign(knots, LatticeField(lat));
  return d;
}

DriftPath axpy_drift(const DriftPath& base, double h, const DriftPath& dir) {
  DriftPath out = base;
  for (std::size_t j = 0; j < out.values.size(); ++j)
    out.values[j] += h * dir.values[j];
  return out;
}

// Pairing of drift paths as flat real vectors over the ball modes:
// sum_j sum_n Re(g conj(eta)).
double drift_pairing(const DriftPath& g, const DriftPath& eta) {
  double acc = 0.0;
  for (std::size_t j = 0; j < g.values.size(); ++j) {
    const ModeTable& tab = g.values[j].lat.table();
    for (std::int32_t idx : tab.ball)
      acc += (g.values[j].coeffs[idx] * std::conj(eta.values[j].coeffs[idx]))
                 .real();
  }
  return acc;
}

} // namespace

TEST_CASE("markov chain configuration is validated") {
  WickTable table(1.25, 1);
  RngStream rng(1, 0);
  ChainConfig cfg;
  SUBCASE("mixing parameter range") {
    cfg.pcn_beta = 0.0;
    CHECK_THROWS_AS(pcn_sample(table, cfg, rng), std::invalid_argument);
    cfg.pcn_beta = 1.2;
    CHECK_THROWS_AS(pcn_sample(table, cfg, rng), std::invalid_argument);
  }
  SUBCASE("chain accounting") {
    cfg.chain_len = cfg.burn_in; // nothing after burn-in
    CHECK_THROWS_AS(pcn_sample(table, cfg, rng), std::invalid_argument);
    cfg = ChainConfig{};
    cfg.thinning = 0;
    CHECK_THROWS_AS(pcn_sample(table, cfg, rng), std::invalid_argument);
  }
}

TEST_CASE("zero potential scale reduces the chain to exact gaussian sampling") {
  WickTable table(1.25, 1);
  ChainConfig cfg;
  cfg.pcn_beta = 0.6;
  cfg.tune_beta = false;
  cfg.burn_in = 200;
  cfg.thinning = 5;
  cfg.chain_len = 1200 + cfg.burn_in; // expect 240 kept samples
  RngStream rng(5, 0);
  ChainResult res = pcn_sample(table, cfg, rng, 0.0, true);

  CHECK(res.accept_rate == 1.0); // log-ratio is identically zero
  CHECK(res.beta_final == 0.6);  // tuning disabled
  CHECK(res.wick_mass.size() == 240);
  CHECK(res.samples.size() == res.wick_mass.size());
  CHECK(res.iat_mass >= 1.0);

  // Every kept sample is exactly mu-distributed.
  MeanSe m{mean_of(res.wick_mass), correlated_se(res.wick_mass)};
  CHECK(std::abs(m.mean) <= 4.0 * m.se);
  std::vector<double> l2s;
  for (const LatticeField& u : res.samples) l2s.push_back(l2sq_coeff(u));
  MeanSe l2{mean_of(l2s), correlated_se(l2s)};
  CHECK(std::abs(l2.mean - table.sigma_n) <= 4.0 * l2.se);
  CHECK(hermitian_defect(res.samples.back()) == 0.0);
}

TEST_CASE("chain and importance sampling agree on the tilted mean mass") {
  // Two independent estimators of E_rho[int :u^2: dx] under the same
  // density e^{-s Rbar} dmu: a pCN chain and self-normalized importance
  // sampling implemented here from scratch on top of mu draws.
  auto cross_validate = [](double alpha, int n, double scale, int n_imp,
                           double* chain_mean_out) {
    WickTable table(alpha, n);
    Lattice lat = table.lattice();

    RngStream rng_imp(303, 1);
    std::vector<double> logw(n_imp), obs(n_imp);
    for (int i = 0; i < n_imp; ++i) {
      LatticeField u = sample_position_field(lat, rng_imp);
      logw[i] = -scale * potential_RN_intensive(u, table);
      obs[i] = wick_mass_obs(u, table.sigma_n);
    }
    RngStream rng_boot(303, 2);
    WeightedMean imp = weighted_mean_logw(logw, obs, 400, rng_boot);
    CHECK(imp.ess > 100.0); // the comparison has actual power

    ChainConfig cfg;
    cfg.burn_in = 3000;
    cfg.thinning = 5;
    cfg.chain_len = cfg.burn_in + 10000;
    RngStream rng_chain(303, 3);
    ChainResult res = pcn_sample(table, cfg, rng_chain, scale, false);
    CHECK(res.accept_rate > 0.05);
    CHECK(res.accept_rate < 0.95);
    double se_chain = correlated_se(res.wick_mass);
    double chain_mean = mean_of(res.wick_mass);
    INFO("chain ", chain_mean, " +/- ", se_chain, " vs importance ", imp.mean,
         " +/- ", imp.se, " (ess ", imp.ess, ")");
    CHECK(std::abs(chain_mean - imp.mean) <= 4.0 * (se_chain + imp.se));
    if (chain_mean_out) *chain_mean_out = chain_mean;
  };
  double m1 = 0.0;
  cross_validate(1.25, 1, 0.4, 20000, &m1);
  cross_validate(1.3, 2, 0.1, 20000, nullptr);
  // The wick-ordered quartic has a negative u^2 part, so at small N the
  // tilt pushes mass up, well clear of the centered reference value 0.
  CHECK(m1 > 100.0);
}

TEST_CASE("normalization estimate respects the convexity bound") {
  // log Z_diamond = log E[e^{-(Rbar + alpha_N)}] >= -E[Rbar] - alpha_N
  // = -alpha_N by Jensen.
  RngStream rng(17, 0);
  WickTable table(1.3, 1, true);
  LogZEstimate z = estimate_logZ_importance(table, 20000, rng);
  CHECK(std::isfinite(z.logz));
  CHECK(z.se > 0.0);
  CHECK(z.ess >= 5.0);
  CHECK(z.logz >= -*table.alpha_n);
  CHECK(z.logz <= 0.5); // strictly negative in exact arithmetic

  WickTable t2(1.3, 2, true);
  RngStream rng2(18, 0);
  LogZEstimate z2 = estimate_logZ_importance(t2, 4000, rng2);
  CHECK(z2.logz >= -*t2.alpha_n);

  CHECK_THROWS_AS(estimate_logZ_importance(table, 5, rng),
                  std::invalid_argument);
}

TEST_CASE("singularity constants") {
  SUBCASE("ball sum for A_N against a direct loop") {
    double alpha = 1.05;
    double expo = 6.0 - 8.0 * alpha;
    double acc = 0.0;
    for (int i = -3; i <= 3; ++i)
      for (int j = -3; j <= 3; ++j)
        for (int k = -3; k <= 3; ++k)
          if (i * i + j * j + k * k <= 9)
            acc += std::pow(jb2(i, j, k), 0.5 * expo);
    CHECK(singularity_A(alpha, 3) == doctest::Approx(acc).epsilon(1e-13));
  }
  SUBCASE("normalization identity B_N^2 A_N sqrt(log N) = 1") {
    for (int n : {2, 8, 32}) {
      double a = singularity_A(1.125, n), b = singularity_B(1.125, n);
      CHECK(b * b * a * std::sqrt(std::log(static_cast<double>(n))) ==
            doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  SUBCASE("B needs log N > 0") {
    CHECK_THROWS_AS(singularity_B(1.125, 1), std::invalid_argument);
  }
}

TEST_CASE("scaled potential statistic under the gaussian reference") {
  RngStream rng(23, 0);
  auto stats = singularity_statistic(1.05, {2, 4}, 3000,
                                     EnsembleLaw::gaussian_mu, rng);
  REQUIRE(stats.size() == 2);
  for (const SingularityStat& st : stats) {
    CHECK(st.a_n == doctest::Approx(singularity_A(1.05, st.trunc_n)));
    CHECK(st.b_n == doctest::Approx(singularity_B(1.05, st.trunc_n)));
    // Exact chaos variance of B_N R_N.
    WickTable table(1.05, st.trunc_n);
    CHECK(st.exact_var ==
          doctest::Approx(st.b_n * st.b_n * potential_RN_variance(table))
              .epsilon(1e-12));
    // Centered mean, and sample variance consistent with the exact one
    // (error bar from the empirical fourth moment).
    CHECK(std::abs(st.mean) <= 4.0 * st.se_mean);
    double m4 = 0.0;
    for (double x : st.samples) m4 += std::pow(x - st.mean, 4);
    m4 /= static_cast<double>(st.samples.size());
    double se_var =
        std::sqrt((m4 - st.var * st.var) / static_cast<double>(st.samples.size()));
    CHECK(std::abs(st.var - st.exact_var) <= 5.0 * se_var);
  }
  SUBCASE("tilted-law variant runs and reports finite statistics") {
    RngStream r2(29, 0);
    auto rho = singularity_statistic(1.05, {2}, 100, EnsembleLaw::gibbs_rho, r2);
    REQUIRE(rho.size() == 1);
    CHECK(rho[0].samples.size() == 100);
    CHECK(std::isfinite(rho[0].mean));
    CHECK(std::isfinite(rho[0].var));
  }
}

TEST_CASE("brownian field path has independent scaled increments") {
  Lattice lat(1.25, 1);
  RngStream rng(31, 0);
  const int k = 2, n_paths = 4000;
  std::vector<double> inc0, inc1, end1;
  for (int i = 0; i < n_paths; ++i) {
    FieldPath p = sample_brownian_field_path(lat, k, rng);
    REQUIRE(p.values.size() == static_cast<std::size_t>(k) + 1);
    CHECK(l2sq_coeff(p.values[0]) == 0.0);
    inc0.push_back(std::norm(p.values[1].at(0, 0, 0)));
    inc1.push_back(std::norm(p.values[2].at(1, 0, 0) - p.values[1].at(1, 0, 0)));
    end1.push_back(std::norm(p.values[2].at(1, 0, 0)));
  }
  // E|c_n(Y(t+dt)-Y(t))|^2 = dt <n>^{-2 alpha}; at the endpoint t = 1.
  auto near = [](const std::vector<double>& xs, double target) {
    MeanSe m = mean_se(xs);
    INFO("mean=", m.mean, " target=", target);
    return std::abs(m.mean - target) <= 4.0 * m.se;
  };
  CHECK(near(inc0, 0.5));
  CHECK(near(inc1, 0.5 * std::pow(2.0, -1.25)));
  CHECK(near(end1, std::pow(2.0, -1.25)));
  CHECK_THROWS_AS(sample_brownian_field_path(lat, 0, rng),
                  std::invalid_argument);
}

TEST_CASE("drift change of variables") {
  WickTable table(1.3, 2);
  Lattice lat = table.lattice();
  RngStream rng(37, 0);
  const int k = 4;
  FieldPath y = sample_brownian_field_path(lat, k, rng);

  SUBCASE("pure noise part matches the wick-cube route") {
    DriftPath ud = drift_change_of_variables(table, y);
    REQUIRE(ud.values.size() == static_cast<std::size_t>(k) + 1);
    const ModeTable& tab = lat.table();
    for (int j = 0; j <= k; ++j) {
      double t = static_cast<double>(j) / k;
      LatticeField cube = wick_power(y.values[j], 3, t * table.sigma_n);
      for (std::int32_t idx : tab.ball) {
        auto n = tab.decode(idx);
        cplx expected = cube.at(n[0], n[1], n[2]) *
                        std::pow(1.0 + tab.nsq[idx], -table.alpha);
        CHECK(std::abs(ud.values[j].coeffs[idx] - expected) <= 1e-12);
      }
    }
  }
  SUBCASE("drift enters through the smoothed increment") {
    DriftPath theta = zero_drift(lat, k);
    RngStream r2(41, 0);
    for (LatticeField& v : theta.values)
      v = 0.3 * sample_position_field(lat, r2);
    DriftPath with = drift_change_of_variables(table, y, &theta);
    DriftPath without = drift_change_of_variables(table, y);
    const ModeTable& tab = lat.table();
    for (int j = 0; j <= k; ++j) {
      const LatticeField& th = theta.values[std::min(j, k - 1)];
      for (std::int32_t idx : tab.ball) {
        cplx expected = without.values[j].coeffs[idx] +
                        std::pow(1.0 + tab.nsq[idx], -0.5 * table.alpha) *
                            th.coeffs[idx];
        CHECK(std::abs(with.values[j].coeffs[idx] - expected) <= 1e-13);
      }
    }
  }
  SUBCASE("time-grid mismatch throws") {
    DriftPath theta = zero_drift(lat, k + 1);
    CHECK_THROWS_AS(drift_change_of_variables(table, y, &theta),
                    std::invalid_argument);
  }
}

TEST_CASE("path energy quadrature") {
  WickTable table(1.25, 1);
  Lattice lat = table.lattice();
  auto mode_field = [&](double re) {
    LatticeField f(lat);
    f.at(1, 0, 0) = cplx(re, 0.0);
    f.at(-1, 0, 0) = cplx(re, 0.0);
    return f;
  };
  const double w = std::pow(2.0, 1.25); // <n>^{2 alpha} at |n|^2 = 1

  SUBCASE("piecewise-constant values integrate exactly") {
    DriftPath d;
    d.time_knots = 3;
    d.values = {mode_field(0.5), mode_field(1.0), mode_field(0.0)};
    // ||v||_{H^alpha}^2 = 2 w re^2 per knot; mean over knots, halved.
    double expect = 0.5 * (2 * w * (0.25 + 1.0 + 0.0)) / 3.0;
    CHECK(half_halpha_energy(table, d) == doctest::Approx(expect).epsilon(1e-13));
  }
  SUBCASE("knot samples use the trapezoid rule") {
    DriftPath d;
    d.time_knots = 2;
    d.values = {mode_field(1.0), mode_field(2.0), mode_field(3.0)};
    double expect = 0.5 * 0.5 * (0.5 * 2 * w + 2 * w * 4 + 0.5 * 2 * w * 9);
    CHECK(half_halpha_energy(table, d) == doctest::Approx(expect).epsilon(1e-13));
  }
  SUBCASE("size mismatch throws") {
    DriftPath d;
    d.time_knots = 3;
    d.values = {mode_field(1.0)};
    CHECK_THROWS_AS(half_halpha_energy(table, d), std::invalid_argument);
  }
}

TEST_CASE("mean path energy of the noise drift recovers the counterterm") {
  // (1/2) E int_0^1 ||z-dot||^2_{H^alpha} dt = alpha_N up to the O(K^{-2})
  // trapezoid bias.
  for (auto [alpha, n] : {std::pair<double, int>{1.25, 1}, {1.3, 2}}) {
    WickTable table(alpha, n, true);
    Lattice lat = table.lattice();
    RngStream rng(43, n);
    const int k = 16, n_paths = 400;
    std::vector<double> vals;
    for (int i = 0; i < n_paths; ++i) {
      FieldPath y = sample_brownian_field_path(lat, k, rng);
      DriftPath ud = drift_change_of_variables(table, y);
      vals.push_back(half_halpha_energy(table, ud));
    }
    MeanSe m = mean_se(vals);
    INFO("alpha=", alpha, " N=", n, ": ", m.mean, " +/- ", m.se,
         " target ", *table.alpha_n);
    CHECK(std::abs(m.mean - *table.alpha_n) <=
          4.0 * m.se + 0.01 * *table.alpha_n);
  }
}

TEST_CASE("shifted-drift identity in expectation") {
  WickTable table(1.25, 2, true);
  Lattice lat = table.lattice();
  const int k = 16;
  DriftPath theta = zero_drift(lat, k);
  LatticeField f(lat);
  f.at(0, 0, 0) = cplx(0.3, 0.0);
  f.at(1, 0, 0) = cplx(0.1, 0.05);
  f.at(-1, 0, 0) = std::conj(f.at(1, 0, 0));
  for (LatticeField& v : theta.values) v = f;

  RngStream rng(47, 0);
  std::vector<double> diffs = shifted_drift_identity_samples(table, theta, 300, rng);
  MeanSe m = mean_se(diffs);
  INFO("paired mean ", m.mean, " +/- ", m.se);
  CHECK(std::abs(m.mean) <= 4.0 * m.se + 0.01 * *table.alpha_n);

  WickTable bare(1.25, 2);
  CHECK_THROWS_AS(shifted_drift_identity_samples(bare, theta, 10, rng),
                  std::logic_error);
}

TEST_CASE("variational objective gradient matches finite differences") {
  Lattice lat(1.25, 1);
  const int k = 3;
  RngStream rng(53, 0);
  std::vector<FieldPath> paths;
  for (int i = 0; i < 4; ++i)
    paths.push_back(sample_brownian_field_path(lat, k, rng));
  DriftPath theta = zero_drift(lat, k), eta = zero_drift(lat, k);
  for (LatticeField& v : theta.values) v = 0.2 * sample_position_field(lat, rng);
  for (LatticeField& v : eta.values) v = sample_position_field(lat, rng);

  auto fd_check = [&](const WickTable& table, double coeff) {
    DriftPath grad;
    bd_objective_grad(table, theta, paths, coeff, &grad);
    double analytic = drift_pairing(grad, eta);
    const double h = 1e-5;
    double hi = bd_objective_grad(table, axpy_drift(theta, h, eta), paths,
                                  coeff, nullptr);
    double lo = bd_objective_grad(table, axpy_drift(theta, -h, eta), paths,
                                  coeff, nullptr);
    double fd = (hi - lo) / (2 * h);
    INFO("analytic ", analytic, " fd ", fd);
    CHECK(std::abs(analytic - fd) <= 1e-4 * (1.0 + std::abs(fd)));
  };
  SUBCASE("quartic objective") {
    WickTable table(1.25, 1, true);
    fd_check(table, 0.0);
  }
  SUBCASE("linear objective") {
    WickTable table(1.25, 1);
    fd_check(table, 2.0);
  }
  SUBCASE("quartic objective requires the counterterm") {
    WickTable bare(1.25, 1);
    CHECK_THROWS_AS(bd_objective_grad(bare, theta, paths, 0.0, nullptr),
                    std::logic_error);
  }
}

TEST_CASE("optimizer reaches the analytic optimum of the linear objective") {
  // F = c u_hat(0): optimal drift cancels the zero mode, value -c^2/2.
  WickTable table(1.25, 1);
  Lattice lat = table.lattice();
  OptConfig cfg;
  cfg.iterations = 300;
  cfg.n_paths = 16;
  cfg.n_eval_paths = 512;
  cfg.lr = 0.05;
  RngStream rng(59, 0);
  VariationalResult res =
      boue_dupuis_minimize(table, zero_drift(lat, 4), cfg, rng, 3.0);
  CHECK(res.drift.time_knots == 4);
  CHECK(res.trace.size() == 300);
  CHECK(res.trace.front() > res.trace.back()); // it went downhill
  INFO("objective ", res.objective, " +/- ", res.se);
  CHECK(std::abs(res.objective - (-4.5)) <= 0.05 * 4.5);
}

TEST_CASE("optimized bound brackets the direct normalization estimate") {
  // The drift functional upper-bounds -log Z_diamond for EVERY drift, so the
  // fresh-batch objective must sit above -log Z up to MC error; a healthy
  // optimizer also lands below the zero-drift value alpha_N.
  WickTable table(1.25, 1, true);
  Lattice lat = table.lattice();
  OptConfig cfg;
  cfg.iterations = 300;
  cfg.n_paths = 128; // small batches overfit the ~50-parameter drift
  cfg.n_eval_paths = 512;
  RngStream rng(61, 0);
  VariationalResult res =
      boue_dupuis_minimize(table, zero_drift(lat, 4), cfg, rng);
  RngStream rng2(62, 0);
  LogZEstimate z = estimate_logZ_importance(table, 20000, rng2);
  INFO("objective ", res.objective, " +/- ", res.se, "; -logz ", -z.logz,
       " +/- ", z.se);
  CHECK(res.objective >= -z.logz - 4.0 * (res.se + z.se));
  CHECK(res.objective <= *table.alpha_n + 4.0 * res.se);

  SUBCASE("malformed initial drift is rejected") {
    DriftPath bad;
    bad.time_knots = 3;
    bad.values.assign(2, LatticeField(lat));
    CHECK_THROWS_AS(boue_dupuis_minimize(table, bad, cfg, rng),
                    std::invalid_argument);
  }
}
