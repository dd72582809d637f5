#pragma once
#include "dollard/moller.hpp"
#include "dollard/switching.hpp"
#include <span>
#include <vector>

//! Adiabatic program: the eps-switched standard S-matrix S_0^eps, its ln eps
//! phase divergence, the diagonal Dollard dressing that factorises it, and
//! stability under a shift of the switching origin.
namespace dollard {

//! Smallest T with e^{-eps (T - |t0|)} <= tolerance.
double switch_off_horizon(double epsilon, double origin_shift,
                          double tolerance = 1e-8);

//! Throws ConfigError when the switched coupling is not numerically off at
//! +-T (e^{-eps (T - |t0|)} >= 1e-8) or eps <= 0.
void check_switch_off(const SwitchingSpec &sw, double T);

//! S_0^eps psi = U_0(T)^{-1} U^eps(T <- -T) U_0(-T) psi.
State adiabatic_standard_s(const State &psi, double T, const SwitchingSpec &sw,
                           const PotentialSpec &pot, const StepperConfig &cfg,
                           PropagationStats *stats = nullptr);

//! Momentum-diagonal dressing phase L(eps, +inf) alpha m/|k| (zero at k = 0).
//! Equal to -L(eps, -inf) alpha m/|k|, so the same factor multiplies on
//! both sides.
std::vector<double> ir_dressing_phase(const Grid &grid, double alpha, double epsilon);

//! e^{i L(eps,inf) V_D} S_0^eps e^{-i L(eps,-inf) V_D} psi, V_D = alpha m/|k|.
//! At eps = 0 the dressing is the identity.
State factorized_s(const State &psi, double T, const SwitchingSpec &sw,
                   const PotentialSpec &pot, const StepperConfig &cfg,
                   PropagationStats *stats = nullptr);

struct IRReport {
  std::vector<double> epsilons; // decreasing
  std::vector<double> horizons;
  std::vector<double> phases;   // unwrapped arg <psi, S_0^eps psi>
  std::vector<double> moduli;   // |<psi, S_0^eps psi>|
  std::vector<double> factorized_cauchy; // ||S_fact^{eps_j+1} - S_fact^{eps_j}|| psi
  std::vector<double> undressed_cauchy;  // ||S_0^{eps_j+1} - S_0^{eps_j}|| psi
  std::vector<double> norm_drift;        // max over both outputs per eps
  std::vector<State> factorized;         // S_fact^eps psi
  std::vector<State> undressed;          // S_0^eps psi
  std::size_t steps = 0;
};

//! Runs S_0^eps and S_fact^eps over the schedule. The horizon is
//! `fixed_horizon` when positive, otherwise T(eps) from switch_off_horizon.
//! Epsilons run concurrently.
IRReport adiabatic_ir_report(const State &psi, std::span<const double> epsilons,
                             const PotentialSpec &pot, const StepperConfig &cfg,
                             double origin_shift = 0.0, std::size_t workers = 1,
                             double fixed_horizon = 0.0);

struct IRSlopeFit {
  double slope = 0.0; // d phase / d ln(1/eps)
  double intercept = 0.0;
  double residual = 0.0;
  bool ambiguous = false; // adjacent raw phases jumped by more than pi/2
};

//! Least squares of the unwrapped phase against ln(1/eps); >= 4 points.
IRSlopeFit ir_slope_fit(std::span<const double> epsilons,
                        std::span<const double> phases);
IRSlopeFit ir_slope_fit(const IRReport &report);

//! Scalar prediction of the same slope from the two dressing factors alone:
//! fits arg <psi, e^{-2 i E_1(eps) alpha m/|k|} psi> against ln(1/eps).
double dressing_slope_prediction(const State &psi, double alpha,
                                 std::span<const double> epsilons);

//! || S_fact(t0) psi - S_fact(0) psi || at matched eps and T. |t0| <= 10.
double switching_shift_check(const State &psi, double T, const SwitchingSpec &sw,
                             const PotentialSpec &pot, const StepperConfig &cfg);

} // namespace dollard
