// fphi: command-line front end. Every subcommand takes flat key=value
// options (also loadable from --config FILE; explicit flags win) and writes
// <out>.csv plus a <out>.json metadata sidecar.
//
// Exit codes: 0 success, 2 bad flag/config value or mismatched resume
// parameters, 3 runtime failure (diverged integrator, statistical machinery),
// 4 unreadable or corrupt files.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "fphi/experiments.hpp"
#include "fphi/version.hpp"

namespace {

struct KeyDoc {
  const char* flag;
  const char* help;
};

const KeyDoc kKeys[] = {
    {"--alpha", "dispersion exponent in (1, 3/2]"},
    {"--trunc-n", "frequency cutoff N (sharp ball projector)"},
    {"--n-list", "comma-separated cutoffs for sweeps, e.g. 4,8,16"},
    {"--dt", "time step (default 0.01)"},
    {"--tfinal", "final time (default 1.0)"},
    {"--seed", "master RNG seed (default 1)"},
    {"--ensemble", "ensemble size / sample count"},
    {"--out", "output basename; writes <out>.csv and <out>.json"},
    {"--config", "key=value file loaded before flags (flags win)"},
    {"--beta", "pCN proposal mixing in (0,1] (default 0.25)"},
    {"--burn-in", "pCN burn-in steps"},
    {"--thinning", "pCN thinning stride"},
    {"--draws", "number of kept pCN samples"},
    {"--tune-beta", "adapt beta toward 25% acceptance during burn-in"},
    {"--potential-scale", "scales the quartic exponent (0 = Gaussian)"},
    {"--save-state", "write the last kept sample as a field checkpoint"},
    {"--knots", "drift time knots (variational)"},
    {"--iterations", "optimizer iterations"},
    {"--paths", "optimizer batch size (common random numbers)"},
    {"--eval-paths", "fresh evaluation batch size"},
    {"--lr", "optimizer learning rate"},
    {"--linear-f", "replace the quartic by c*u_hat(0) (analytic test)"},
    {"--law", "ensemble law: mu (Gaussian) or rho (quartic-tilted)"},
    {"--splitting", "lie or strang (default strang)"},
    {"--noise", "exact or euler noise covariance (default exact)"},
    {"--potential", "evolve kick: cubic or none"},
    {"--record-every", "record a CSV row every k steps (default 10)"},
    {"--checkpoint", "simulation checkpoint path (default <out>.ckpt)"},
    {"--resume", "resume from a simulation checkpoint"},
    {"--init", "initial position from a field checkpoint"},
    {"--observables", "comma-separated observable names (invariance)"},
    {"--wick-on", "false replaces sigma_N by 0 in the kick (control)"},
    {"--kind", "stochastic object: lin|quad|cub|cub_int|quint_int|sept_int"},
    {"--s", "Sobolev index / weight exponent override"},
    {"--coeffs", "microscopic potential a0,a1,... (coeff of z^{2j})"},
    {"--eps", "regularity margin for coupled comparison (default 0.1)"},
    {"--mode", "counting mode: sweep|basic|two-ball|k3|k3-weighted"},
    {"--zeta-step", "phase grid spacing (default 0.5)"},
    {"--n-scale", "shell scale N (counting)"},
    {"--a-scale", "shift scale A (counting)"},
    {"--b-scale", "second shell scale B (two-ball counting)"},
    {"--shift", "shift vector a1,a2,a3 (default A,0,0)"},
    {"--sign", "+1 or -1 in the two-bracket phase"},
    {"--n-scales", "triple shell scales N1,N2,N3 (each <= 4)"},
    {"--signs", "four phase signs e0,e1,e2,e3 (each +1 or -1)"},
    {"--with-alpha-n", "also compute alpha_N in wick-table rows"},
};

const std::map<std::string, std::string> kSubHelp = {
    {"wick-table", "sigma_N and alpha_N for one cutoff or an --n-list sweep"},
    {"alpha-n", "quadruple-convolution sum S_N and alpha_N = (3/4) S_N"},
    {"sample-gibbs", "pCN chain for the quartic-tilted measure"},
    {"logz", "importance-sampling estimate of log Z and E_rho[int :u^2:]"},
    {"variational", "stochastic-control upper bound for -log Z"},
    {"singularity", "law of B_N R_N under mu or rho across cutoffs"},
    {"evolve", "run the damped stochastic flow; checkpoint and resume"},
    {"invariance", "start from the tilted measure, test stationarity"},
    {"stochobj-decay", "spectral decay exponent of a stochastic object"},
    {"stochobj-converge", "H^s convergence rate across cutoffs, shared noise"},
    {"universality-coeffs", "averaged coefficients, criticality, kappa fit"},
    {"universality-converge", "macroscopic vs cubic reference, shared noise"},
    {"counting-verify", "lattice-point counting bounds vs enumeration"},
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fphi: pseudo-spectral laboratory for the fractional-dispersion "
      "quartic field on the 3-torus"};
  app.set_version_flag("--version", fphi::version_string);
  app.require_subcommand(0, 1);

  std::map<std::string, std::string> flags;
  for (const std::string& name : fphi::subcommand_names()) {
    auto it = kSubHelp.find(name);
    CLI::App* sub =
        app.add_subcommand(name, it == kSubHelp.end() ? "" : it->second);
    for (const KeyDoc& kd : kKeys) {
      std::string key = fphi::RunConfig::normalize(std::string(kd.flag + 2));
      sub->add_option_function<std::string>(
          kd.flag,
          [&flags, key](const std::string& v) { flags[key] = v; }, kd.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fphi::exit_validation;
  }

  if (app.get_subcommands().empty()) {
    std::cerr << "error: expected a subcommand; run 'fphi --help'\n";
    return fphi::exit_validation;
  }
  std::string name = app.get_subcommands().front()->get_name();

  try {
    fphi::RunConfig cfg;
    if (flags.count("config"))
      cfg = fphi::parse_config_file(flags.at("config"));
    for (const auto& kvp : flags)
      if (kvp.first != "config") cfg.set(kvp.first, kvp.second);
    std::cout << fphi::run_subcommand(name, cfg) << "\n";
    return fphi::exit_ok;
  } catch (const fphi::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "run 'fphi " << name << " --help' for usage\n";
    return fphi::exit_validation;
  } catch (const fphi::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fphi::exit_io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fphi::exit_runtime;
  }
}
