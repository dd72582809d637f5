#pragma once
#include "dollard/moller.hpp"
#include <span>
#include <vector>

//! Asymptotic dynamics extracted from a reference family, the interpolation
//! formula, and asymptotic (Heisenberg) observables at expectation level.
namespace dollard {

//! D_t(s) = U_ref(t)^{-1} U_ref(t + s) applied to a probe.
//! Requires t > 0 and |s| <= t/2.
struct AsymptoticDynamicsProbe {
  ReferenceKind reference = ReferenceKind::dollard;
  double alpha = 0.5;
  SwitchingSpec sw;
  double base_time = 0.0;
  double increment = 0.0;
  State probe;
};

struct IncrementResult {
  State state;                   // D_t(s) psi
  double distance_to_free = 0.0; // || D_t(s) psi - U_0(s) psi ||
};

IncrementResult asymptotic_dynamics_probe(const AsymptoticDynamicsProbe &p);

//! || D_t(s1 + s2) psi - D_t(s1) D_t(s2) psi ||.
double group_law_residual(ReferenceKind ref, double alpha, const SwitchingSpec &sw,
                          double t, double s1, double s2, const State &psi);

//! max over lattice momenta with |k| >= p_min of the phase deviation of the
//! (momentum-diagonal) D_t(s) from the kinetic profile e^{-i k^2 s / 2m}.
double kinetic_profile_deviation(ReferenceKind ref, double alpha,
                                 const SwitchingSpec &sw, const Grid &grid,
                                 double t, double s, double p_min);

struct InterpolationResult {
  double residual = 0.0;     // || U(s) Omega(T) psi - Omega(T) U_0(s) psi ||
  double tail_probe = 0.0;   // || Omega(2T) psi - Omega(T) psi ||
  double tail_shifted = 0.0; // same for U_0(s) psi
  double bound = 0.0;        // max(floor, 3 (tail_probe + tail_shifted))
};

//! Both sides at the same horizon T. The Cauchy tails of the two vectors
//! entering the triangle inequality are measured alongside.
InterpolationResult interpolation_residual(const State &psi, double s, double T,
                                           const PotentialSpec &pot,
                                           const StepperConfig &cfg,
                                           ReferenceKind ref = ReferenceKind::dollard,
                                           double floor = 1e-3);

struct ObservableTrace {
  std::vector<double> times;
  std::vector<double> momentum;
  std::vector<double> position;
  std::vector<double> energy;
  //! ln |<p>(t_j) - <p>(t_last)| against ln t_j (empirical rate).
  LineFit convergence;
  bool convergence_valid = false;
};

//! <U(t) psi, A U(t) psi> for A in {p, x, H} at the (increasing, >= 0)
//! schedule times, one trajectory propagated sequentially.
ObservableTrace asymptotic_momentum(const State &psi, std::span<const double> times,
                                    const PotentialSpec &pot,
                                    const StepperConfig &cfg);

//! Fit <x>(t) = p_out t / m + c ln t + d over the schedule.
struct DriftFit {
  double log_coefficient = 0.0; // c
  double log_stderr = 0.0;
  double asymptotic_momentum = 0.0; // p_out
  double offset = 0.0;              // d
  double residual = 0.0;
  //! Kinematics not transmission-dominated (<p>^2/2m <= 3 V_max) or the
  //! fit residual exceeds the threshold: several classical branches likely.
  bool flagged = false;
  ObservableTrace trace;
};

DriftFit fit_position_drift(std::span<const double> times,
                            std::span<const double> positions, double mass);

DriftFit asymptotic_position_drift(const State &psi, std::span<const double> times,
                                   const PotentialSpec &pot,
                                   const StepperConfig &cfg,
                                   double residual_threshold = 0.05);

//! | <Omega(T) phi, H Omega(T) phi> - <phi, H_0 phi> |.
double energy_identity_residual(const State &phi, double T,
                                const PotentialSpec &pot, const StepperConfig &cfg,
                                ReferenceKind ref = ReferenceKind::dollard);

//! The three sides of momentum covariance for psi = Omega(T) phi:
//! <U(t) psi, p U(t) psi>, <U_0(t) phi, p U_0(t) phi>, <phi, p phi>.
struct MomentumCovariance {
  double interacting = 0.0;
  double free = 0.0;
  double reference = 0.0;
};

MomentumCovariance momentum_covariance(const State &phi, double t, double T,
                                       const PotentialSpec &pot,
                                       const StepperConfig &cfg);

} // namespace dollard
