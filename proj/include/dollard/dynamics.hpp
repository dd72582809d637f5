#pragma once
#include "dollard/spectral_core.hpp"
#include <cstddef>
#include <vector>

//! Propagators: exact (momentum-diagonal) free and Dollard reference
//! dynamics, and the Strang split-step full dynamics with an optional
//! adiabatically switched coupling.
namespace dollard {

enum class PotentialKind { coulomb_reg, short_range_control };

//! coulomb_reg:         V(x) = alpha / sqrt(x^2 + a^2)
//! short_range_control: V(x) = alpha e^{-mu |x|} / sqrt(x^2 + a^2)
struct PotentialSpec {
  PotentialKind kind = PotentialKind::coulomb_reg;
  double alpha = 0.5;
  double core_width = 1.0;
  double decay_scale = 0.5;

  double operator()(double x) const;
  double derivative(double x) const;
  //! Largest value of V, attained at x = 0.
  double max_value() const;
  //! Throws ConfigError for a non-positive core width or decay scale.
  void validate() const;
};

std::vector<double> sample_potential(const Grid &grid, const PotentialSpec &pot);
double expect_potential(const State &state, const PotentialSpec &pot);
//! <H> = <kinetic> + <V>.
double expect_energy(const State &state, const PotentialSpec &pot);

//! Coupling alpha e^{-eps |t + t0|}; epsilon = 0 means no switching.
struct SwitchingSpec {
  double epsilon = 0.0;
  double origin_shift = 0.0;

  double coupling(double t) const;
};

struct StepperConfig {
  double dt = 0.05;
  //! Support-margin check interval, in steps.
  std::size_t record_stride = 64;
  //! Width of the unmonitored strip at each box edge; <= 0 selects 32 dx.
  double edge_margin = -1.0;
  //! Disabled only for oracle comparisons on tiny periodic boxes.
  bool monitor_support = true;
  //! Maximum probability allowed outside the monitored window.
  double leak_tolerance = 1e-8;
};

//! Throws ConfigError unless dt * E_max < 0.5 (E_max = k_max^2 / 2m).
void check_stability(const Grid &grid, const StepperConfig &cfg);

//! Half-width of the monitored window |x| <= L/2 - margin.
double monitored_half_width(const Grid &grid, const StepperConfig &cfg);

struct PropagationStats {
  std::size_t steps = 0;
  double max_norm_drift = 0.0;
};

//! Process-wide totals over every SplitStepPropagator call: steps taken and
//! the largest per-call norm drift. Used for run manifests.
PropagationStats global_propagation_stats();
void reset_global_propagation_stats();

//! U_0(t) = e^{-i k^2 t / 2m}, exact.
State free_propagate(const State &state, double t);

//! Dollard phase Phi(k, t) = -sign(t) (alpha m/|k|) ln((|k||t| + m)/m)
//! (unit length l0 = 1), zero in the k = 0 bin. FFT order.
std::vector<double> dollard_phase(const Grid &grid, double t, double alpha);

//! U_D(t) = U_0(t) e^{i Phi(k, t)}.
State dollard_propagate(const State &state, double t, double alpha);

//! -L(eps, t) alpha m / |k|, with L the switching integral (zero for |t| <= 1).
std::vector<double> adiabatic_dollard_phase(const Grid &grid, double t,
                                            double alpha, double epsilon);

//! U_D^eps(t) = U_0(t) e^{-i L(eps, t) alpha m / |k|}. Only sw.epsilon is
//! used: an origin shift acts on the interacting dynamics, not the reference.
State adiabatic_dollard_propagate(const State &state, double t, double alpha,
                                  const SwitchingSpec &sw);

//! Strang split-step integrator for H(t) = H_0 + g(t) V with g from the
//! switching spec evaluated at each step's midpoint. Reusable across calls;
//! not thread-safe (one instance per worker).
class SplitStepPropagator {
public:
  SplitStepPropagator(GridPtr grid, PotentialSpec pot, SwitchingSpec sw,
                      StepperConfig cfg);

  //! Evolves from t_from to t_to (either orientation) in
  //! N = ceil(|t_to - t_from| / dt) equal steps.
  State propagate(const State &state, double t_from, double t_to);

  const PropagationStats &stats() const { return m_stats; }

private:
  void prepare_kinetic(double h);
  void potential_phase(double weight, CVector &out) const;
  void check_support(std::span<const cplx> psi, double t) const;

  GridPtr m_grid;
  PotentialSpec m_pot;
  SwitchingSpec m_sw;
  StepperConfig m_cfg;
  std::vector<double> m_v;
  std::vector<std::size_t> m_outside; // indices outside the monitored window
  double m_kin_h = 0.0;
  CVector m_kin;                     // e^{-i k^2 h / 2m} / n
  double m_pot_h = 0.0;
  CVector m_pot_full, m_pot_half;    // e^{-i V h}, e^{-i V h/2} at g = 1
  PropagationStats m_stats;
};

State full_propagate(const State &state, double t_from, double t_to,
                     const PotentialSpec &pot, const SwitchingSpec &sw,
                     const StepperConfig &cfg,
                     PropagationStats *stats = nullptr);

} // namespace dollard
