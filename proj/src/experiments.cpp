#include "fphi/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fphi/counting.hpp"
#include "fphi/dynamics.hpp"
#include "fphi/field.hpp"
#include "fphi/gibbs.hpp"
#include "fphi/stats.hpp"
#include "fphi/stochobj.hpp"
#include "fphi/universality.hpp"
#include "fphi/variational.hpp"
#include "fphi/version.hpp"
#include "fphi/wick.hpp"

namespace fphi {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  for (char& c : f)
    if (c == '_') c = '-';
  return f;
}

double parse_double_value(const std::string& key, const std::string& v) {
  const char* s = v.c_str();
  char* end = nullptr;
  double x = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw ValidationError("bad numeric value for " + flag_name(key) + ": '" +
                          v + "'");
  return x;
}

long long parse_int_value(const std::string& key, const std::string& v) {
  const char* s = v.c_str();
  char* end = nullptr;
  long long x = std::strtoll(s, &end, 10);
  if (end == s || *end != '\0')
    throw ValidationError("bad integer value for " + flag_name(key) + ": '" +
                          v + "'");
  return x;
}

struct WallTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

JsonSidecar base_sidecar(const std::string& name, const RunConfig& cfg,
                         double alpha, long long trunc_n, double dt,
                         long long seed) {
  JsonSidecar js;
  js.set("tool", std::string("fphi"));
  js.set("version", std::string(version_string));
  js.set("subcommand", name);
  js.set("alpha", alpha);
  js.set("trunc_n", static_cast<std::int64_t>(trunc_n));
  js.set("dt", dt);
  js.set("seed", static_cast<std::int64_t>(seed));
  std::vector<std::string> echo;
  for (const auto& kvp : cfg.kv) echo.push_back(kvp.first + "=" + kvp.second);
  js.set_array("config", echo);
  return js;
}

void write_outputs(const std::string& out, const CsvWriter& csv,
                   JsonSidecar& js, const WallTimer& wt) {
  js.set_array("outputs",
               std::vector<std::string>{out + ".csv", out + ".json"});
  js.set("wall_seconds", wt.seconds());
  csv.write(out + ".csv");
  js.write(out + ".json");
}

double req_alpha(const RunConfig& cfg) {
  double a = cfg.get_double("alpha");
  if (!(a > 1.0) || !(a <= 1.5))
    throw ValidationError("--alpha must lie in (1, 1.5]");
  return a;
}

int req_trunc_n(const RunConfig& cfg) {
  long long n = cfg.get_int("trunc_n");
  if (n < 1 || n > 4096)
    throw ValidationError("--trunc-n must lie in [1, 4096]");
  return static_cast<int>(n);
}

std::vector<int> int_list_or(const RunConfig& cfg, const std::string& key,
                             const std::string& def, int lo, int hi) {
  std::vector<int> out;
  for (long long v : cfg.get_int_list(key, def)) {
    if (v < lo || v > hi)
      throw ValidationError(flag_name(key) + " entries must lie in [" +
                            std::to_string(lo) + ", " + std::to_string(hi) +
                            "]");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ValidationError(flag_name(key) + " must be nonempty");
  return out;
}

Splitting parse_splitting(const RunConfig& cfg) {
  std::string s = cfg.get_str("splitting", "strang");
  if (s == "lie") return Splitting::lie;
  if (s == "strang") return Splitting::strang;
  throw ValidationError("--splitting must be 'lie' or 'strang'");
}

NoiseMode parse_noise_mode(const RunConfig& cfg) {
  std::string s = cfg.get_str("noise", "exact");
  if (s == "exact") return NoiseMode::exact_covariance;
  if (s == "euler") return NoiseMode::euler;
  throw ValidationError("--noise must be 'exact' or 'euler'");
}

ObjectKind parse_kind(const RunConfig& cfg, const std::string& def) {
  std::string s = RunConfig::normalize(cfg.get_str("kind", def));
  for (ObjectKind k :
       {ObjectKind::lin, ObjectKind::quad, ObjectKind::cub, ObjectKind::cub_int,
        ObjectKind::quint_int, ObjectKind::sept_int})
    if (s == object_tag(k)) return k;
  throw ValidationError(
      "--kind must be one of lin|quad|cub|cub_int|quint_int|sept_int");
}

MicroPotential parse_potential(const RunConfig& cfg) {
  MicroPotential v;
  v.a = cfg.get_double_list("coeffs");
  if (v.a.size() < 3)
    throw ValidationError(
        "--coeffs needs at least three entries a0,a1,a2 (even polynomial "
        "sum a_j z^{2j} of degree >= 4)");
  if (v.a.back() == 0.0)
    throw ValidationError("--coeffs leading coefficient must be nonzero");
  return v;
}

std::string fmt3(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ---- drivers ----

std::string drv_wick_table(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  std::vector<int> ns = cfg.has("n_list")
                            ? int_list_or(cfg, "n_list", "", 1, 4096)
                            : std::vector<int>{req_trunc_n(cfg)};
  CsvWriter csv({"alpha", "trunc_n", "sigma_n", "quad_conv", "alpha_n"});
  double last_sigma = 0.0, last_alpha_n = 0.0;
  for (int n : ns) {
    bool with_an = cfg.get_bool("with_alpha_n", n <= 64);
    double sig = sigma_N(alpha, n);
    double s = with_an ? quad_conv_sum(alpha, n)
                       : std::numeric_limits<double>::quiet_NaN();
    double an = 0.75 * s;
    csv.add_row({alpha, static_cast<double>(n), sig, s, an});
    last_sigma = sig;
    last_alpha_n = an;
  }
  JsonSidecar js = base_sidecar("wick-table", cfg, alpha, ns.back(), 0.0,
                                cfg.get_int("seed", 0));
  write_outputs(out, csv, js, wt);
  std::ostringstream os;
  os.precision(10);
  os << "wick-table: alpha=" << alpha << " N=" << ns.back()
     << " sigma_N=" << last_sigma;
  if (std::isfinite(last_alpha_n)) os << " alpha_N=" << last_alpha_n;
  return os.str();
}

std::string drv_alpha_n(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  std::vector<int> ns = cfg.has("n_list")
                            ? int_list_or(cfg, "n_list", "", 1, 80)
                            : std::vector<int>{req_trunc_n(cfg)};
  for (int n : ns)
    if (n > 80)
      throw ValidationError(
          "--trunc-n > 80 exceeds the FFT memory budget of alpha-n");
  CsvWriter csv({"alpha", "trunc_n", "quad_conv", "alpha_n"});
  double last = 0.0;
  for (int n : ns) {
    double s = quad_conv_sum(alpha, n);
    last = 0.75 * s;
    csv.add_row({alpha, static_cast<double>(n), s, last});
  }
  JsonSidecar js = base_sidecar("alpha-n", cfg, alpha, ns.back(), 0.0,
                                cfg.get_int("seed", 0));
  write_outputs(out, csv, js, wt);
  return "alpha-n: alpha_N(" + fmt3(alpha) + ", " + std::to_string(ns.back()) +
         ") = " + fmt3(last);
}

std::string drv_sample_gibbs(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  int n = req_trunc_n(cfg);
  long long seed = cfg.get_int("seed", 1);
  ChainConfig cc;
  cc.pcn_beta = cfg.get_double("beta", 0.25);
  cc.burn_in = static_cast<int>(cfg.get_int("burn_in", 2000));
  cc.thinning = static_cast<int>(cfg.get_int("thinning", 10));
  long long draws = cfg.get_int("draws", 200);
  if (draws < 1) throw ValidationError("--draws must be >= 1");
  cc.chain_len = cc.burn_in + cc.thinning * static_cast<int>(draws);
  cc.tune_beta = cfg.get_bool("tune_beta", true);
  double scale = cfg.get_double("potential_scale", 1.0);
  bool save = cfg.has("save_state");

  WickTable table(alpha, n);
  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  ChainResult res = pcn_sample(table, cc, rng, scale, save);

  CsvWriter csv({"index", "wick_mass", "potential"});
  for (std::size_t i = 0; i < res.wick_mass.size(); ++i)
    csv.add_row({static_cast<double>(i), res.wick_mass[i], res.potential[i]});
  if (save) {
    if (res.samples.empty())
      throw ValidationError("--save-state: chain kept no samples");
    write_field_checkpoint(cfg.get_str("save_state"), res.samples.back());
  }
  JsonSidecar js = base_sidecar("sample-gibbs", cfg, alpha, n, 0.0, seed);
  js.set("sigma_n", table.sigma_n);
  js.set("accept_rate", res.accept_rate);
  js.set("beta_final", res.beta_final);
  js.set("iat_wick_mass", res.iat_mass);
  js.set("draws", static_cast<std::int64_t>(res.wick_mass.size()));
  js.set("burn_in", static_cast<std::int64_t>(cc.burn_in));
  js.set("thinning", static_cast<std::int64_t>(cc.thinning));
  js.set("potential_scale", scale);
  write_outputs(out, csv, js, wt);
  return "sample-gibbs: " + std::to_string(res.wick_mass.size()) +
         " draws, accept=" + fmt3(res.accept_rate) +
         " beta=" + fmt3(res.beta_final) + " iat=" + fmt3(res.iat_mass);
}

std::string drv_logz(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  int n = req_trunc_n(cfg);
  long long seed = cfg.get_int("seed", 1);
  long long ensemble = cfg.get_int("ensemble", 2000);
  if (ensemble < 1000)
    throw ValidationError("--ensemble must be >= 1000 for logz");

  WickTable table(alpha, n, true);
  RngStream rng_z(static_cast<std::uint64_t>(seed), 0);
  LogZEstimate z =
      estimate_logZ_importance(table, static_cast<int>(ensemble), rng_z);
  RngStream rng_m(static_cast<std::uint64_t>(seed), 1);
  WeightedMean wm =
      importance_wick_mass(table, static_cast<int>(ensemble), rng_m);

  CsvWriter csv({"logz", "logz_se", "ess", "wick_mass_mean", "wick_mass_se"});
  csv.add_row({z.logz, z.se, z.ess, wm.mean, wm.se});
  JsonSidecar js = base_sidecar("logz", cfg, alpha, n, 0.0, seed);
  js.set("sigma_n", table.sigma_n);
  js.set("alpha_n", table.alpha_n.value());
  js.set("ensemble", static_cast<std::int64_t>(ensemble));
  js.set("ess", z.ess);
  write_outputs(out, csv, js, wt);
  return "logz: " + fmt3(z.logz) + " +- " + fmt3(z.se) +
         " (ess=" + fmt3(z.ess) + "), E_rho[wick mass] = " + fmt3(wm.mean) +
         " +- " + fmt3(wm.se);
}

std::string drv_variational(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  int n = req_trunc_n(cfg);
  long long seed = cfg.get_int("seed", 1);
  int knots = static_cast<int>(cfg.get_int("knots", 4));
  if (knots < 1) throw ValidationError("--knots must be >= 1");
  OptConfig oc;
  oc.iterations = static_cast<int>(cfg.get_int("iterations", 300));
  oc.n_paths = static_cast<int>(cfg.get_int("paths", 32));
  oc.n_eval_paths = static_cast<int>(cfg.get_int("eval_paths", 256));
  oc.lr = cfg.get_double("lr", 0.05);
  double linear_f = cfg.get_double("linear_f", 0.0);

  WickTable table(alpha, n, linear_f == 0.0);
  Lattice lat = table.lattice();
  DriftPath init;
  init.time_knots = knots;
  init.values.assign(static_cast<std::size_t>(knots), LatticeField(lat));
  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  VariationalResult res =
      boue_dupuis_minimize(table, init, oc, rng, linear_f);

  CsvWriter csv({"record", "iteration", "value"});
  for (std::size_t i = 0; i < res.trace.size(); ++i)
    csv.add_row_mixed({"trace", format_double(static_cast<double>(i)),
                       format_double(res.trace[i])});
  csv.add_row_mixed({"objective", "-1", format_double(res.objective)});
  csv.add_row_mixed({"objective_se", "-1", format_double(res.se)});
  JsonSidecar js = base_sidecar("variational", cfg, alpha, n, 0.0, seed);
  js.set("knots", static_cast<std::int64_t>(knots));
  js.set("iterations", static_cast<std::int64_t>(oc.iterations));
  js.set("paths", static_cast<std::int64_t>(oc.n_paths));
  js.set("eval_paths", static_cast<std::int64_t>(oc.n_eval_paths));
  js.set("lr", oc.lr);
  js.set("linear_f", linear_f);
  if (table.alpha_n) js.set("alpha_n", table.alpha_n.value());
  js.set("objective", res.objective);
  js.set("objective_se", res.se);
  write_outputs(out, csv, js, wt);
  return "variational: objective = " + fmt3(res.objective) + " +- " +
         fmt3(res.se) + " after " + std::to_string(oc.iterations) +
         " iterations";
}

std::string drv_singularity(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  std::vector<int> ns = int_list_or(cfg, "n_list", "4,8,16,32", 2, 256);
  long long seed = cfg.get_int("seed", 1);
  long long ensemble = cfg.get_int("ensemble", 400);
  std::string law_s = cfg.get_str("law", "mu");
  EnsembleLaw law;
  if (law_s == "mu")
    law = EnsembleLaw::gaussian_mu;
  else if (law_s == "rho")
    law = EnsembleLaw::gibbs_rho;
  else
    throw ValidationError("--law must be 'mu' or 'rho'");

  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  std::vector<SingularityStat> stats = singularity_statistic(
      alpha, ns, static_cast<int>(ensemble), law, rng);

  CsvWriter csv({"trunc_n", "a_n", "b_n", "mean", "se_mean", "var",
                 "exact_var", "n_samples"});
  for (const auto& st : stats)
    csv.add_row({static_cast<double>(st.trunc_n), st.a_n, st.b_n, st.mean,
                 st.se_mean, st.var, st.exact_var,
                 static_cast<double>(st.samples.size())});
  JsonSidecar js = base_sidecar("singularity", cfg, alpha, ns.back(), 0.0,
                                seed);
  js.set("law", law_s);
  js.set("ensemble", static_cast<std::int64_t>(ensemble));
  write_outputs(out, csv, js, wt);
  std::ostringstream os;
  os << "singularity (" << law_s << "): mean[B_N R_N] =";
  os.precision(4);
  for (const auto& st : stats) os << " " << st.mean;
  return os.str();
}

std::string drv_evolve(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  std::string resume = cfg.get_str("resume", "");
  double dt, alpha;
  int n;
  long long seed;
  std::uint64_t step;
  PhaseState state;
  RngStream rng;

  if (!resume.empty()) {
    SimCheckpoint cp = read_sim_checkpoint(resume);
    alpha = cp.state.pos.lat.alpha;
    n = cp.state.pos.lat.trunc_n;
    dt = cp.dt;
    if (cfg.has("alpha") && cfg.get_double("alpha") != alpha)
      throw ValidationError("resume: --alpha disagrees with the checkpoint");
    if (cfg.has("trunc_n") && cfg.get_int("trunc_n") != n)
      throw ValidationError("resume: --trunc-n disagrees with the checkpoint");
    if (cfg.has("dt") && cfg.get_double("dt") != dt)
      throw ValidationError("resume: --dt disagrees with the checkpoint");
    seed = static_cast<long long>(cp.master_seed);
    rng = RngStream(cp.master_seed, cp.stream_id);
    rng.counter = cp.rng_counter;
    step = cp.step_index;
    state = cp.state;
  } else {
    alpha = req_alpha(cfg);
    n = req_trunc_n(cfg);
    dt = cfg.get_double("dt", 0.01);
    if (!(dt > 0.0) || dt > 1.0)
      throw ValidationError("--dt must lie in (0, 1]");
    seed = cfg.get_int("seed", 1);
    rng = RngStream(static_cast<std::uint64_t>(seed), 0);
    Lattice lat(alpha, n);
    if (cfg.has("init")) {
      LatticeField pos = read_field_checkpoint(cfg.get_str("init"));
      if (!(pos.lat == lat))
        throw ValidationError(
            "init: field checkpoint lattice disagrees with --alpha/--trunc-n");
      state.pos = pos;
      state.vel = sample_velocity_field(lat, rng);
    } else {
      state = sample_gaussian_pair(lat, rng);
    }
    step = 0;
  }

  double t_final = cfg.get_double("tfinal", 1.0);
  long long total_steps = std::llround(t_final / dt);
  if (total_steps < static_cast<long long>(step))
    throw ValidationError("--tfinal precedes the checkpoint time");
  long long record_every = cfg.get_int("record_every", 10);
  if (record_every < 1) throw ValidationError("--record-every must be >= 1");
  std::string potential = cfg.get_str("potential", "cubic");
  if (potential != "cubic" && potential != "none")
    throw ValidationError("--potential must be 'cubic' or 'none'");
  StepScheme scheme{dt, parse_splitting(cfg), parse_noise_mode(cfg)};
  std::string ckpt_path = cfg.get_str("checkpoint", out + ".ckpt");

  WickTable table(alpha, n);
  ModeKernels kern = make_mode_kernels(state.pos.lat, dt, scheme.noise_mode);

  CsvWriter csv({"step", "t", "energy", "pos_l2sq", "wick_mass", "re_u_100"});
  auto record = [&](std::uint64_t k) {
    double t = static_cast<double>(k) * dt;
    double lin = 0.5 * (l2sq_coeff(state.vel) +
                        std::pow(sobolev_norm(state.pos, alpha), 2));
    double energy =
        potential == "cubic" ? flow_energy(state, table) : lin;
    double l2 = l2sq_coeff(state.pos);
    csv.add_row({static_cast<double>(k), t, energy, l2,
                 torus_volume * (l2 - table.sigma_n),
                 state.pos.at(1, 0, 0).real()});
  };
  if (step == 0) record(0);
  while (static_cast<long long>(step) < total_steps) {
    double t_now = static_cast<double>(step) * dt;
    if (potential == "cubic")
      step_truncated_cubic(state, table, kern, scheme, rng, t_now);
    else
      step_flow(state, kern, nullptr, scheme, rng, t_now);
    ++step;
    if (step % static_cast<std::uint64_t>(record_every) == 0 ||
        static_cast<long long>(step) == total_steps)
      record(step);
  }

  SimCheckpoint cp;
  cp.state = state;
  cp.master_seed = rng.master_seed;
  cp.stream_id = rng.stream_id;
  cp.rng_counter = rng.counter;
  cp.step_index = step;
  cp.sim_time = static_cast<double>(step) * dt;
  cp.dt = dt;
  write_sim_checkpoint(ckpt_path, cp);

  JsonSidecar js = base_sidecar("evolve", cfg, alpha, n, dt, seed);
  js.set("tfinal", t_final);
  js.set("steps", static_cast<std::int64_t>(step));
  js.set("splitting",
         scheme.splitting == Splitting::lie ? std::string("lie")
                                            : std::string("strang"));
  js.set("noise", scheme.noise_mode == NoiseMode::euler
                      ? std::string("euler")
                      : std::string("exact"));
  js.set("potential", potential);
  js.set("record_every", static_cast<std::int64_t>(record_every));
  js.set("checkpoint", ckpt_path);
  js.set("sigma_n", table.sigma_n);
  write_outputs(out, csv, js, wt);
  return "evolve: reached t=" + fmt3(static_cast<double>(step) * dt) + " in " +
         std::to_string(step) + " steps; checkpoint " + ckpt_path;
}

std::string drv_invariance(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  int n = req_trunc_n(cfg);
  double dt = cfg.get_double("dt", 0.01);
  double t_final = cfg.get_double("tfinal", 1.0);
  long long seed = cfg.get_int("seed", 1);
  long long ensemble = cfg.get_int("ensemble", 500);
  bool wick_on = cfg.get_bool("wick_on", true);
  double scale = cfg.get_double("potential_scale", 1.0);
  std::vector<std::string> obs = split_commas(
      cfg.get_str("observables", "wick_mass,p2_l2sq,p4_l2sq,re_u_100"));
  StepScheme scheme{dt, parse_splitting(cfg), parse_noise_mode(cfg)};

  WickTable table(alpha, n);
  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  InvarianceReport rep = invariance_experiment(
      table, scheme, t_final, static_cast<int>(ensemble), obs, rng, wick_on,
      scale);

  CsvWriter csv({"observable", "mean0", "se0", "mean_t", "se_t", "p_value"});
  double min_p = 1.0;
  for (const auto& row : rep.rows) {
    csv.add_row_mixed({row.observable, format_double(row.mean0),
                       format_double(row.se0), format_double(row.mean_t),
                       format_double(row.se_t), format_double(row.p_value)});
    min_p = std::min(min_p, row.p_value);
  }
  JsonSidecar js = base_sidecar("invariance", cfg, alpha, n, dt, seed);
  js.set("tfinal", t_final);
  js.set("ensemble", static_cast<std::int64_t>(ensemble));
  js.set("wick_on", wick_on);
  js.set("potential_scale", scale);
  js.set("accept_rate", rep.accept_rate);
  js.set("any_nan", rep.any_nan);
  write_outputs(out, csv, js, wt);
  return "invariance: min paired p-value = " + fmt3(min_p) + " over " +
         std::to_string(rep.rows.size()) + " observables (accept=" +
         fmt3(rep.accept_rate) + ")";
}

std::string drv_stochobj_decay(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  long long n = cfg.get_int("trunc_n", 16);
  if (n < 8 || n > 64)
    throw ValidationError("--trunc-n must lie in [8, 64] for stochobj-decay");
  ObjectKind kind = parse_kind(cfg, "lin");
  long long ensemble = cfg.get_int("ensemble", 200);
  long long seed = cfg.get_int("seed", 1);

  WickTable table(alpha, static_cast<int>(n));
  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  DecayFit fit =
      fit_decay_exponent(kind, table, static_cast<int>(ensemble), rng);

  CsvWriter csv({"log_jb", "log_power"});
  for (std::size_t i = 0; i < fit.shell_log_jb.size(); ++i)
    csv.add_row({fit.shell_log_jb[i], fit.shell_log_power[i]});
  JsonSidecar js = base_sidecar("stochobj-decay", cfg, alpha, n, 0.0, seed);
  js.set("kind", std::string(object_tag(kind)));
  js.set("ensemble", static_cast<std::int64_t>(ensemble));
  js.set("exponent", fit.exponent);
  js.set("exponent_se", fit.stderr_);
  js.set("predicted", fit.predicted);
  write_outputs(out, csv, js, wt);
  return std::string("stochobj-decay: <") + object_tag(kind) +
         "> exponent = " + fmt3(fit.exponent) + " +- " + fmt3(fit.stderr_) +
         " (predicted " + fmt3(fit.predicted) + ")";
}

std::string drv_stochobj_converge(const RunConfig& cfg,
                                  const std::string& out) {
  WallTimer wt;
  double alpha = req_alpha(cfg);
  ObjectKind kind = parse_kind(cfg, "cub_int");
  std::vector<int> ns = int_list_or(cfg, "n_list", "4,8,16", 2, 64);
  long long ensemble = cfg.get_int("ensemble", 64);
  long long seed = cfg.get_int("seed", 1);
  double s_override = cfg.has("s") ? cfg.get_double("s") : 1e9;

  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  ConvergenceRate cr = convergence_rate(kind, alpha, ns,
                                        static_cast<int>(ensemble), rng,
                                        s_override);

  CsvWriter csv({"trunc_n", "median_diff"});
  for (std::size_t i = 0; i < cr.n2_list.size(); ++i)
    csv.add_row({static_cast<double>(cr.n2_list[i]), cr.median_diff[i]});
  JsonSidecar js =
      base_sidecar("stochobj-converge", cfg, alpha, ns.back(), 0.0, seed);
  js.set("kind", std::string(object_tag(kind)));
  js.set("ensemble", static_cast<std::int64_t>(ensemble));
  js.set("gamma", cr.gamma);
  js.set("gamma_se", cr.gamma_se);
  js.set("s_used", cr.s_used);
  write_outputs(out, csv, js, wt);
  return std::string("stochobj-converge: <") + object_tag(kind) +
         "> gamma = " + fmt3(cr.gamma) + " +- " + fmt3(cr.gamma_se) +
         " at s = " + fmt3(cr.s_used);
}

std::string drv_universality_coeffs(const RunConfig& cfg,
                                    const std::string& out) {
  WallTimer wt;
  double alpha = cfg.get_double("alpha");
  if (!(alpha > 1.0) || !(alpha < 1.5))
    throw ValidationError("--alpha must lie in (1, 1.5) for universality");
  MicroPotential v = parse_potential(cfg);
  std::vector<int> ns = int_list_or(cfg, "n_list", "16,32,64,128", 2, 4096);

  double sigma = continuum_sigma(alpha);
  std::vector<double> am = averaged_coeffs(v, sigma);
  std::vector<double> aq = averaged_coeffs_quadrature(v, sigma);
  CriticalityReport crit = check_criticality_positivity(v, sigma);

  CsvWriter csv({"row_kind", "index", "value_a", "value_b"});
  for (std::size_t j = 0; j < am.size(); ++j)
    csv.add_row_mixed({"abar_j", format_double(static_cast<double>(j)),
                       format_double(am[j]), format_double(aq[j])});
  for (int n : ns) {
    RenormCoeffsN rc = renorm_coeffs_N(v, alpha, n);
    csv.add_row_mixed({"sigma_tilde_n", format_double(static_cast<double>(n)),
                       format_double(rc.sigma_tilde),
                       format_double(sigma - rc.sigma_tilde)});
  }
  JsonSidecar js = base_sidecar("universality-coeffs", cfg, alpha, ns.back(),
                                0.0, cfg.get_int("seed", 0));
  js.set("sigma", sigma);
  js.set("critical", crit.critical);
  js.set("positive", crit.positive);
  js.set("abar1", crit.abar1);
  std::string kappa_note = "n/a (not critical)";
  if (crit.critical) {
    KappaFit kf = kappa_fit(v, alpha, ns);
    csv.add_row_mixed({"kappa", "0", format_double(kf.kappa),
                       format_double(kf.stderr_)});
    js.set("kappa", kf.kappa);
    js.set("kappa_stderr", kf.stderr_);
    kappa_note = fmt3(kf.kappa) + " +- " + fmt3(kf.stderr_);
  }
  write_outputs(out, csv, js, wt);
  return std::string("universality-coeffs: critical=") +
         (crit.critical ? "yes" : "no") + " positive=" +
         (crit.positive ? "yes" : "no") + " kappa=" + kappa_note;
}

std::string drv_universality_converge(const RunConfig& cfg,
                                      const std::string& out) {
  WallTimer wt;
  double alpha = cfg.get_double("alpha");
  if (!(alpha > 1.0) || !(alpha < 1.5))
    throw ValidationError("--alpha must lie in (1, 1.5) for universality");
  MicroPotential v = parse_potential(cfg);
  std::vector<int> ns = int_list_or(cfg, "n_list", "4,8,16", 2, 32);
  double t_final = cfg.get_double("tfinal", 1.0);
  double dt = cfg.get_double("dt", 0.01);
  long long ensemble = cfg.get_int("ensemble", 6);
  long long seed = cfg.get_int("seed", 1);
  double eps = cfg.get_double("eps", 0.1);

  RngStream rng(static_cast<std::uint64_t>(seed), 0);
  CoupledResult res = coupled_convergence_experiment(
      v, alpha, t_final, ns, static_cast<int>(ensemble), dt, rng, eps);

  CsvWriter csv({"trunc_n", "median_sup_diff"});
  for (const auto& row : res.rows)
    csv.add_row({static_cast<double>(row.trunc_n), row.median_sup_diff});
  JsonSidecar js =
      base_sidecar("universality-converge", cfg, alpha, ns.back(), dt, seed);
  js.set("tfinal", t_final);
  js.set("ensemble", static_cast<std::int64_t>(ensemble));
  js.set("eps", eps);
  js.set("kappa_used", res.kappa_used);
  js.set("a2bar_used", res.a2bar_used);
  js.set("strictly_decreasing", res.strictly_decreasing);
  write_outputs(out, csv, js, wt);
  std::ostringstream os;
  os.precision(4);
  os << "universality-converge: median sup-diff =";
  for (const auto& row : res.rows) os << " " << row.median_sup_diff;
  os << (res.strictly_decreasing ? " (strictly decreasing)"
                                 : " (NOT strictly decreasing)");
  return os.str();
}

struct SweepRow {
  std::string family;
  int n1 = 0, n2 = 0, n3 = 0;
  int a_scale = 0, b_scale = 0;
  double s = std::numeric_limits<double>::quiet_NaN();
  std::string signs;
  BoundReport rep;
  double ratio_weak = 0.0;
};

void push_row(CsvWriter& csv, const SweepRow& r) {
  csv.add_row_mixed(
      {r.family, format_double(r.n1), format_double(r.n2), format_double(r.n3),
       format_double(r.a_scale), format_double(r.b_scale), format_double(r.s),
       r.signs, format_double(static_cast<double>(r.rep.observed_sup_count)),
       format_double(r.rep.weighted_sum), format_double(r.rep.bound_value),
       format_double(r.rep.ratio), format_double(r.ratio_weak),
       format_double(r.rep.sup_zeta)});
}

std::string sign_str(int s) { return s > 0 ? "+" : "-"; }

std::string drv_counting(const RunConfig& cfg, const std::string& out) {
  WallTimer wt;
  double alpha = cfg.get_double("alpha", 1.25);
  if (!(alpha > 1.0) || !(alpha <= 1.5))
    throw ValidationError("--alpha must lie in (1, 1.5]");
  std::string mode = cfg.get_str("mode", "sweep");
  double zeta_step = cfg.get_double("zeta_step", 0.5);
  if (!(zeta_step > 0.0))
    throw ValidationError("--zeta-step must be positive");

  CsvWriter csv({"family", "n1", "n2", "n3", "a_scale", "b_scale", "s",
                 "signs", "observed", "weighted", "bound", "ratio",
                 "ratio_weak", "zeta"});
  double max_ratio = 0.0, max_weak = 0.0;
  long long n_rows = 0;
  auto note = [&](const SweepRow& r) {
    push_row(csv, r);
    max_ratio = std::max(max_ratio, r.rep.ratio);
    max_weak = std::max(max_weak, r.ratio_weak);
    ++n_rows;
  };

  auto get_sign = [&]() {
    long long s = cfg.get_int("sign", -1);
    if (s != 1 && s != -1) throw ValidationError("--sign must be +1 or -1");
    return static_cast<int>(s);
  };
  auto get_shift = [&](int a_scale) {
    std::array<int, 3> shift{a_scale, 0, 0};
    if (cfg.has("shift")) {
      auto v = cfg.get_int_list("shift", "");
      if (v.size() != 3)
        throw ValidationError("--shift needs three comma-separated entries");
      for (int i = 0; i < 3; ++i) shift[i] = static_cast<int>(v[i]);
    }
    return shift;
  };
  auto get_scales = [&]() {
    auto v = cfg.get_int_list("n_scales", "4,4,4");
    if (v.size() != 3)
      throw ValidationError("--n-scales needs three comma-separated entries");
    return std::array<int, 3>{static_cast<int>(v[0]), static_cast<int>(v[1]),
                              static_cast<int>(v[2])};
  };
  auto get_signs4 = [&]() {
    auto v = cfg.get_int_list("signs", "1,-1,1,-1");
    if (v.size() != 4)
      throw ValidationError("--signs needs four comma-separated entries");
    std::array<int, 4> eps;
    for (int i = 0; i < 4; ++i) {
      if (v[i] != 1 && v[i] != -1)
        throw ValidationError("--signs entries must be +1 or -1");
      eps[i] = static_cast<int>(v[i]);
    }
    return eps;
  };
  auto signs4_str = [](const std::array<int, 4>& e) {
    std::string s;
    for (int v : e) s += sign_str(v);
    return s;
  };

  if (mode == "basic" || mode == "two-ball") {
    int n = static_cast<int>(cfg.get_int("n_scale", 8));
    int a = static_cast<int>(cfg.get_int("a_scale", 8));
    CountingQuery q{alpha, n, a, 0, get_shift(a), get_sign()};
    SweepRow r;
    r.n1 = n;
    r.a_scale = a;
    r.signs = sign_str(q.sign);
    if (mode == "basic") {
      r.family = "basic";
      r.rep = count_basic(q, zeta_step);
      r.ratio_weak = r.rep.ratio * std::sqrt(static_cast<double>(n));
    } else {
      q.b_scale = static_cast<int>(cfg.get_int("b_scale", 8));
      r.family = "two_ball";
      r.b_scale = q.b_scale;
      r.rep = count_two_balls(q, zeta_step);
      r.ratio_weak =
          r.rep.ratio * std::sqrt(static_cast<double>(std::min(q.b_scale, n)));
    }
    note(r);
  } else if (mode == "k3" || mode == "k3-weighted") {
    std::array<int, 3> scales = get_scales();
    std::array<int, 4> eps = get_signs4();
    int nmax = std::max({scales[0], scales[1], scales[2]});
    SweepRow r;
    r.n1 = scales[0];
    r.n2 = scales[1];
    r.n3 = scales[2];
    r.signs = signs4_str(eps);
    if (mode == "k3") {
      r.family = "k3";
      r.rep = count_phase_k3(alpha, scales, eps, zeta_step);
    } else {
      r.family = "k3_weighted";
      r.s = cfg.get_double("s", alpha - 0.75);
      r.rep = weighted_sum_k3(alpha, r.s, scales, eps, zeta_step);
    }
    r.ratio_weak = r.rep.ratio * std::sqrt(static_cast<double>(nmax));
    note(r);
  } else if (mode == "sweep") {
    const std::vector<int> dyadic{1, 2, 4, 8, 16, 32};
    for (int n : dyadic)
      for (int a : dyadic)
        for (int sign : {1, -1}) {
          CountingQuery q{alpha, n, a, 0, {a, 0, 0}, sign};
          SweepRow r;
          r.family = "basic";
          r.n1 = n;
          r.a_scale = a;
          r.signs = sign_str(sign);
          r.rep = count_basic(q, zeta_step);
          r.ratio_weak = r.rep.ratio * std::sqrt(static_cast<double>(n));
          note(r);
          for (int b : dyadic) {
            q.b_scale = b;
            SweepRow r2 = r;
            r2.family = "two_ball";
            r2.b_scale = b;
            r2.rep = count_two_balls(q, zeta_step);
            r2.ratio_weak = r2.rep.ratio *
                            std::sqrt(static_cast<double>(std::min(b, n)));
            note(r2);
          }
        }
    // Triple sweep: sorted shell scales (phase families cover permutations
    // through the sign patterns) and eps0 = +1 only — negating all four
    // signs mirrors the phase array, giving the same sup.
    std::vector<std::array<int, 3>> combos;
    const std::vector<int> small{1, 2, 4};
    for (int i1 : small)
      for (int i2 : small)
        for (int i3 : small)
          if (i1 >= i2 && i2 >= i3) combos.push_back({i1, i2, i3});
    std::vector<std::array<int, 4>> sign_sets;
    for (int e1 : {1, -1})
      for (int e2 : {1, -1})
        for (int e3 : {1, -1}) sign_sets.push_back({1, e1, e2, e3});
    for (const auto& sc : combos)
      for (const auto& eps : sign_sets) {
        SweepRow r;
        r.family = "k3";
        r.n1 = sc[0];
        r.n2 = sc[1];
        r.n3 = sc[2];
        r.signs = signs4_str(eps);
        r.rep = count_phase_k3(alpha, sc, eps, zeta_step);
        r.ratio_weak = r.rep.ratio * std::sqrt(static_cast<double>(sc[0]));
        note(r);
      }
    const std::vector<std::array<int, 3>> wcombos{
        {4, 4, 4}, {4, 4, 2}, {2, 2, 2}};
    for (const auto& sc : wcombos)
      for (double s : {alpha - 1.0, alpha - 0.75})
        for (const auto& eps : sign_sets) {
          SweepRow r;
          r.family = "k3_weighted";
          r.n1 = sc[0];
          r.n2 = sc[1];
          r.n3 = sc[2];
          r.s = s;
          r.signs = signs4_str(eps);
          r.rep = weighted_sum_k3(alpha, s, sc, eps, zeta_step);
          r.ratio_weak = r.rep.ratio * std::sqrt(static_cast<double>(sc[0]));
          note(r);
        }
  } else {
    throw ValidationError(
        "--mode must be sweep|basic|two-ball|k3|k3-weighted");
  }

  JsonSidecar js = base_sidecar("counting-verify", cfg, alpha, 0, 0.0,
                                cfg.get_int("seed", 0));
  js.set("mode", mode);
  js.set("zeta_step", zeta_step);
  js.set("queries", static_cast<std::int64_t>(n_rows));
  js.set("max_ratio", max_ratio);
  js.set("max_ratio_weakened", max_weak);
  write_outputs(out, csv, js, wt);
  return "counting-verify (" + mode + "): " + std::to_string(n_rows) +
         " queries, max ratio = " + fmt3(max_ratio) +
         ", weakened-bound max ratio = " + fmt3(max_weak);
}

struct Entry {
  const char* name;
  std::string (*fn)(const RunConfig&, const std::string&);
};

const Entry kEntries[] = {
    {"wick-table", drv_wick_table},
    {"alpha-n", drv_alpha_n},
    {"sample-gibbs", drv_sample_gibbs},
    {"logz", drv_logz},
    {"variational", drv_variational},
    {"singularity", drv_singularity},
    {"evolve", drv_evolve},
    {"invariance", drv_invariance},
    {"stochobj-decay", drv_stochobj_decay},
    {"stochobj-converge", drv_stochobj_converge},
    {"universality-coeffs", drv_universality_coeffs},
    {"universality-converge", drv_universality_converge},
    {"counting-verify", drv_counting},
};

} // namespace

std::string RunConfig::normalize(std::string key) {
  for (char& c : key)
    if (c == '-') c = '_';
  return key;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  kv[normalize(key)] = value;
}

bool RunConfig::has(const std::string& key) const {
  return kv.count(normalize(key)) > 0;
}

std::string RunConfig::get_str(const std::string& key) const {
  auto it = kv.find(normalize(key));
  if (it == kv.end())
    throw ValidationError("missing required option " + flag_name(key));
  return it->second;
}

std::string RunConfig::get_str(const std::string& key,
                               const std::string& def) const {
  auto it = kv.find(normalize(key));
  return it == kv.end() ? def : it->second;
}

double RunConfig::get_double(const std::string& key) const {
  return parse_double_value(key, get_str(key));
}

double RunConfig::get_double(const std::string& key, double def) const {
  auto it = kv.find(normalize(key));
  return it == kv.end() ? def : parse_double_value(key, it->second);
}

long long RunConfig::get_int(const std::string& key) const {
  return parse_int_value(key, get_str(key));
}

long long RunConfig::get_int(const std::string& key, long long def) const {
  auto it = kv.find(normalize(key));
  return it == kv.end() ? def : parse_int_value(key, it->second);
}

bool RunConfig::get_bool(const std::string& key, bool def) const {
  auto it = kv.find(normalize(key));
  if (it == kv.end()) return def;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError("bad boolean value for " + flag_name(key) + ": '" +
                        it->second + "'");
}

std::vector<long long> RunConfig::get_int_list(const std::string& key,
                                               const std::string& def) const {
  std::string raw = get_str(key, def);
  std::vector<long long> out;
  for (const std::string& tok : split_commas(raw)) {
    if (tok.empty())
      throw ValidationError("empty entry in list " + flag_name(key));
    out.push_back(parse_int_value(key, tok));
  }
  return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::string raw = get_str(key);
  std::vector<double> out;
  for (const std::string& tok : split_commas(raw)) {
    if (tok.empty())
      throw ValidationError("empty entry in list " + flag_name(key));
    out.push_back(parse_double_value(key, tok));
  }
  if (out.empty())
    throw ValidationError(flag_name(key) + " must be nonempty");
  return out;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: expected key=value at line " +
                            std::to_string(lineno) + " of " + path);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config: empty key at line " +
                            std::to_string(lineno) + " of " + path);
    cfg.set(key, value);
  }
  return cfg;
}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kEntries) v.push_back(e.name);
    return v;
  }();
  return names;
}

std::string run_subcommand(const std::string& name, const RunConfig& cfg) {
  for (const auto& e : kEntries) {
    if (name == e.name) {
      std::string def_out = RunConfig::normalize(name);
      return e.fn(cfg, cfg.get_str("out", def_out));
    }
  }
  throw ValidationError("unknown subcommand '" + name + "'");
}

} // namespace fphi
