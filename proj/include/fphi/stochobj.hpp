#pragma once

#include "fphi/dynamics.hpp"

namespace fphi {

// Tree-structured stochastic objects built from one noise realization:
//   lin   <1>   stationary stochastic convolution (chaos order 1)
//   quad  <2>   :<1>^2: = <1>^2 - sigma_N            (order 2, band 2N)
//   cub   <3>   :<1>^3: = <1>^3 - 3 sigma_N <1>      (order 3, band 3N)
//   cub_int   <30>  pi_N I(<3>)                      (order 3)
//   quint_int <320> pi_N I(<30> <2>)                 (order 5)
//   sept_int  <70>  pi_N I(<30>^2 <1>)               (order 7)
// I is the Duhamel integral of the damped wave flow, evaluated with the
// exact per-mode propagator and composite-trapezoid forcing quadrature.
enum class ObjectKind { lin, quad, cub, cub_int, quint_int, sept_int };

int chaos_order(ObjectKind k);
const char* object_tag(ObjectKind k); // "lin", "quad", ...

struct TimeSeriesField {
  std::vector<double> times;
  std::vector<LatticeField> values;
};

// Builds the object on the uniform grid {0, dt, ..., t_final} from the
// stream's noise realization (initial data mu-pair, then exact linear+noise
// steps). steps_per_unit >= 64 enforced for the integrated kinds.
// Throws std::invalid_argument on dealiasing/grid violations.
TimeSeriesField build_object(ObjectKind kind, const WickTable& table,
                             double t_final, int steps_per_unit,
                             RngStream rng);

struct DecayFit {
  double exponent = 0.0;
  double stderr_ = 0.0;
  double predicted = 0.0;
  std::vector<double> shell_log_jb;    // mean log<n> per dyadic shell
  std::vector<double> shell_log_power; // log mean E|f(n)|^2 per shell
};

// Least-squares slope of log(shell-averaged E|f(n)|^2) against log <n> over
// dyadic shells |n| ~ 2^j (shells with < 6 modes merged), fit restricted to
// |n| <= N where the chaos-variance asymptotics are clean. The object is
// evaluated at t = 1 under the stationary convention. Predicted slope:
// -3 - 2k(alpha - 3/2) for chaos order k. Requires ensemble >= 200 and
// N >= 8 (throws std::invalid_argument), and >= 3 shells (throws
// std::runtime_error).
DecayFit fit_decay_exponent(ObjectKind kind, const WickTable& table,
                            int ensemble, RngStream& rng);

// Shell-averaged empirical spectrum used by the fit (exposed for the CLI).
struct ShellSpectrum {
  std::vector<double> log_jb;
  std::vector<double> log_power;
};

// Median over an ensemble of ||X_{2N} - X_N||_{H^s} at t = 1 with shared
// noise, for each N in n2_list; gamma is the fitted decay rate of the
// median against N (positive = convergence). s defaults to just below the
// predicted regularity of the kind.
struct ConvergenceRate {
  std::vector<int> n2_list;
  std::vector<double> median_diff;
  double gamma = 0.0;
  double gamma_se = 0.0;
  double s_used = 0.0;
};
ConvergenceRate convergence_rate(ObjectKind kind, double alpha,
                                 const std::vector<int>& n2_list, int ensemble,
                                 RngStream& rng, double s_override = 1e9);

// Second-order remainder v_N = u_N - <1> + <30> along a cubic-flow
// trajectory sharing the noise realization with the objects. Returns the
// remainder series plus decay fits of v_N and u_N at t = t_final.
struct RemainderResult {
  TimeSeriesField v_series;
  double slope_u = 0.0;
  double slope_v = 0.0;
  std::vector<double> sup_hs_v; // sup_t ||v(t)||_{H^{alpha-1/2-eps}} per member
  // Dyadic-shell data behind the two slopes (same shells for both fields).
  std::vector<double> shell_log_jb;
  std::vector<double> shell_log_power_u;
  std::vector<double> shell_log_power_v;
};
RemainderResult second_order_remainder(const WickTable& table, double t_final,
                                       int steps_per_unit, int ensemble,
                                       RngStream& rng);

} // namespace fphi
