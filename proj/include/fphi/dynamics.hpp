#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fphi/wick.hpp"

namespace fphi {

enum class Splitting { lie, strang };
enum class NoiseMode { exact_covariance, euler };

struct StepScheme {
  double dt = 0.01;
  Splitting splitting = Splitting::strang;
  NoiseMode noise_mode = NoiseMode::exact_covariance;
};

// Per-mode data for the damped fractional wave flow
//   d/dt (u,v) = A (u,v),  A = [[0,1],[-<n>^{2a}, -1]],
// over one step: the exact propagator P = e^{dt A} and the lower-Cholesky
// factors of the exact noise covariance Q = Sigma - P Sigma P^T
// (Sigma = diag(<n>^{-2a}, 1) is the stationary covariance, so Q is the
// covariance of the stochastic-convolution increment). chol_half covers the
// per-part (real or imaginary) covariance Q/2 of the n != 0 modes.
struct ModeKernel {
  double p11, p12, p21, p22;
  double l11, l21, l22;    // chol(Q)
  double h11, h21, h22;    // chol(Q/2)
  double q11, q12, q22;    // Q entries (for tests/inspection)
};

// Kernels indexed like the mode cube; computed per distinct <n>^2 then
// broadcast. noise_mode euler replaces Q by [[0,0],[0,2 dt]].
struct ModeKernels {
  double alpha = 0.0;
  double dt = 0.0;
  int trunc_n = 0;
  std::vector<ModeKernel> per_mode; // size (2N+1)^3, valid on the ball
};
ModeKernels make_mode_kernels(const Lattice& lat, double dt,
                              NoiseMode noise_mode = NoiseMode::exact_covariance);

// Exact solution of the homogeneous linear flow over dt (no noise).
PhaseState linear_propagate(const PhaseState& state, double dt);

// Jointly Gaussian (pos, vel) increment with the exact covariance of the
// stochastic convolution over dt. Consumes two normal pairs per
// representative mode, one for n = 0, in storage order.
PhaseState noise_increment(const Lattice& lat, double dt, RngStream& rng);

// Same draw order, reusing precomputed kernels (and honoring their
// noise_mode); the workhorse for shared-noise couplings.
PhaseState noise_increment(const Lattice& lat, const ModeKernels& kern,
                           RngStream& rng);

// state <- P state (exact homogeneous propagator from the kernel table).
void apply_propagator(PhaseState& state, const ModeKernels& kern);

// In-place fused linear+noise substep using precomputed kernels (the exact
// Ornstein-Uhlenbeck update; preserves the Gaussian pair law exactly).
void linear_noise_substep(PhaseState& state, const ModeKernels& kern,
                          RngStream& rng);

// Velocity kick field: any map u -> band-N field added to v with weight -dt.
using KickFn = std::function<LatticeField(const LatticeField&)>;

// Kick for the cubic flow: F[pi_N :(pi_N u)^3:] with variance sigma_n.
LatticeField cubic_kick(const LatticeField& u, const WickTable& table);

// One splitting step of d^2u + du + (1-D)^a u + kick(u) = sqrt(2) xi.
// Lie: linear+noise then full kick; Strang: half kick, linear+noise, half kick.
// Throws std::runtime_error on NaN/overflow with the offending time in the
// message.
void step_flow(PhaseState& state, const ModeKernels& kern, const KickFn& kick,
               const StepScheme& scheme, RngStream& rng, double t_now);

void step_truncated_cubic(PhaseState& state, const WickTable& table,
                          const ModeKernels& kern, const StepScheme& scheme,
                          RngStream& rng, double t_now = 0.0);

// Cubic reference flow with mass term: kick = kappa pi_N u + 4 abar2 pi_N :u^3:.
void step_reference_dagger(PhaseState& state, const WickTable& table,
                           double kappa, double a2bar, const ModeKernels& kern,
                           const StepScheme& scheme, RngStream& rng,
                           double t_now = 0.0);

// Discrete energy of the cubic flow in coefficient variables:
//   (1/2) sum (|v|^2 + <n>^{2a} |u|^2) + mean_x H_4(u; sigma)/4.
// Decays monotonically along the deterministic flow.
double flow_energy(const PhaseState& state, const WickTable& table);

// Stationarity experiment: ensemble drawn from the quartic-tilted measure
// (positions via pCN, velocities Gaussian), evolved to t_final; per
// observable, mean/SE at both ends and a block-bootstrap p-value for the
// paired difference. wick_on=false zeroes sigma_N in the kick only (the
// deliberately broken renormalization control).
struct InvarianceRow {
  std::string observable;
  double mean0, se0, mean_t, se_t;
  double p_value; // paired-difference bootstrap
};
struct InvarianceReport {
  std::vector<InvarianceRow> rows;
  double accept_rate = 0.0; // of the initial-ensemble chain
  bool any_nan = false;
};
// Observable names: "wick_mass" (int :u^2: dx), "p2_l2sq" (||pi_2 u||^2 in
// coefficient l^2), "p4_l2sq", "re_u_100" (Re u_hat(1,0,0)), "vel_l2sq".
InvarianceReport invariance_experiment(const WickTable& table,
                                       const StepScheme& scheme, double t_final,
                                       int ensemble_size,
                                       const std::vector<std::string>& observables,
                                       RngStream& rng, bool wick_on = true,
                                       double potential_scale = 1.0);

} // namespace fphi
