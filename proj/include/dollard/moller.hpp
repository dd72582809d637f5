#pragma once
#include "dollard/dynamics.hpp"
#include "dollard/fitting.hpp"
#include <span>
#include <vector>

//! Finite-horizon Moller operators Omega(T) = U(T)^{-1} U_ref(T), their
//! Cauchy diagnostics over horizon schedules, and wavepacket S-matrix probes.
namespace dollard {

enum class Direction { out, in };

//! free: U_0(t). dollard: U_0(t) e^{i Phi(k,t)} (smooth l0 regularisation).
//! adiabatic_dollard: U_0(t) e^{-i L(eps,t) alpha m/|k|} (sharp lower limit;
//! at eps = 0 this is the literal sign(t) ln|t| phase for |t| > 1).
enum class ReferenceKind { free, dollard, adiabatic_dollard };

//! Total momentum-diagonal phase of U_ref(t), kinetic part included.
std::vector<double> reference_phase(const Grid &grid, double t, ReferenceKind ref,
                                    double alpha, const SwitchingSpec &sw);
State reference_propagate(const State &state, double t, ReferenceKind ref,
                          double alpha, const SwitchingSpec &sw);
//! U_ref(t)^{-1} psi.
State reference_unpropagate(const State &state, double t, ReferenceKind ref,
                            double alpha, const SwitchingSpec &sw);

struct MollerJob {
  State probe;
  double horizon = 0.0;
  Direction direction = Direction::out;
  ReferenceKind reference = ReferenceKind::dollard;
  PotentialSpec pot;
  SwitchingSpec sw;
  StepperConfig cfg;
};

//! Classical-transport envelope check over [0, t] (t of either sign): the
//! packet centre <x> + <p> t/m plus six times its linearly growing width
//! must stay inside the monitored window. Throws ConfigError ("preflight
//! failure") otherwise.
void preflight_transport(const State &probe, double horizon,
                         const StepperConfig &cfg);

//! U(+-T)^{-1} U_ref(+-T) psi: reference dynamics to +-T, then the full
//! dynamics back to 0.
State moller_approximant(const MollerJob &job, PropagationStats *stats = nullptr);

struct PhaseFit {
  double coefficient = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  //! Adjacent increments differ by more than pi/2: the unwrapped phase is
  //! not trustworthy and the schedule should be refined.
  bool ambiguous = false;
};

struct ConvergenceReport {
  std::vector<double> schedule;            // T_1 < ... < T_K
  std::vector<double> pair_distances;      // ||Omega(T_{j+1})psi - Omega(T_j)psi||
  std::vector<double> pair_overlap_phases; // arg <Omega(T_j)psi, Omega(T_{j+1})psi>
  std::vector<double> cumulative_phases;   // running sum of the above, size K
  std::vector<double> norm_drift;          // | ||Omega(T_j)psi|| - ||psi|| |
  LineFit decay_fit;                       // ln d_j vs ln T_j
  bool decay_fit_valid = false;
  PhaseFit log_fit;
  //! Tail ||Omega(inf)psi - Omega(T_K)psi|| extrapolated from the fitted
  //! power law; NaN when no decaying power law was fitted.
  double extrapolated_tail = 0.0;
  std::size_t steps = 0;
};

//! Runs the job family at every horizon of the (increasing) schedule and
//! assembles Cauchy distances, phases and fits. Horizons run concurrently.
ConvergenceReport cauchy_diagnostic(const MollerJob &family,
                                    std::span<const double> schedule,
                                    std::size_t workers = 1);

//! Assembles a report from approximants already computed on the schedule.
ConvergenceReport assemble_report(std::span<const double> schedule,
                                  std::span<const State> approximants,
                                  double probe_norm);

//! Least squares of the cumulative phase against ln T. Needs >= 4 points.
PhaseFit log_phase_fit(const ConvergenceReport &report);

//! Omega_+(T)^dagger Omega_-(T) psi: U_ref(-T) psi, full dynamics -T -> T,
//! then U_ref(T)^{-1}.
State s_matrix_on_packet(const State &psi_in, double horizon,
                         const PotentialSpec &pot, const SwitchingSpec &sw,
                         const StepperConfig &cfg,
                         ReferenceKind ref = ReferenceKind::dollard,
                         PropagationStats *stats = nullptr);

} // namespace dollard
