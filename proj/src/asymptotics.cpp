#include "dollard/asymptotics.hpp"
#include "dollard/errors.hpp"
#include <cmath>

namespace dollard {

namespace {

State increment(const State &psi, ReferenceKind ref, double alpha,
                const SwitchingSpec &sw, double t, double s) {
  return reference_unpropagate(reference_propagate(psi, t + s, ref, alpha, sw), t,
                               ref, alpha, sw);
}

State moller(const State &psi, double T, const PotentialSpec &pot,
             const StepperConfig &cfg, ReferenceKind ref) {
  MollerJob job{psi, T, Direction::out, ref, pot, SwitchingSpec{}, cfg};
  return moller_approximant(job);
}

} // namespace

IncrementResult asymptotic_dynamics_probe(const AsymptoticDynamicsProbe &p) {
  if (!(p.base_time > 0.0))
    throw PreconditionError("asymptotic dynamics probe needs t > 0");
  if (std::abs(p.increment) > 0.5 * p.base_time)
    throw PreconditionError("asymptotic dynamics probe needs |s| <= t/2");
  auto out = increment(p.probe, p.reference, p.alpha, p.sw, p.base_time, p.increment);
  const double d = distance(out, free_propagate(p.probe, p.increment));
  return {std::move(out), d};
}

double group_law_residual(ReferenceKind ref, double alpha, const SwitchingSpec &sw,
                          double t, double s1, double s2, const State &psi) {
  const auto joint = increment(psi, ref, alpha, sw, t, s1 + s2);
  const auto split =
      increment(increment(psi, ref, alpha, sw, t, s2), ref, alpha, sw, t, s1);
  return distance(joint, split);
}

double kinetic_profile_deviation(ReferenceKind ref, double alpha,
                                 const SwitchingSpec &sw, const Grid &grid,
                                 double t, double s, double p_min) {
  const auto late = reference_phase(grid, t + s, ref, alpha, sw);
  const auto early = reference_phase(grid, t, ref, alpha, sw);
  double worst = 0.0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double k = grid.k(m);
    if (std::abs(k) < p_min)
      continue;
    const double kinetic = -k * k * s / (2.0 * grid.mass());
    worst = std::max(worst, std::abs(wrap_phase(late[m] - early[m] - kinetic)));
  }
  return worst;
}

InterpolationResult interpolation_residual(const State &psi, double s, double T,
                                           const PotentialSpec &pot,
                                           const StepperConfig &cfg,
                                           ReferenceKind ref, double floor) {
  InterpolationResult r;
  r.bound = floor;
  if (s == 0.0)
    return r;
  const auto shifted = free_propagate(psi, s);
  const auto omega_psi = moller(psi, T, pot, cfg, ref);
  const auto omega_shifted = moller(shifted, T, pot, cfg, ref);
  const auto lhs = full_propagate(omega_psi, 0.0, s, pot, SwitchingSpec{}, cfg);
  r.residual = distance(lhs, omega_shifted);
  r.tail_probe = distance(moller(psi, 2.0 * T, pot, cfg, ref), omega_psi);
  r.tail_shifted = distance(moller(shifted, 2.0 * T, pot, cfg, ref), omega_shifted);
  r.bound = std::max(floor, 3.0 * (r.tail_probe + r.tail_shifted));
  return r;
}

ObservableTrace asymptotic_momentum(const State &psi, std::span<const double> times,
                                    const PotentialSpec &pot,
                                    const StepperConfig &cfg) {
  if (times.empty())
    throw PreconditionError("observable trace needs a non-empty schedule");
  ObservableTrace tr;
  SplitStepPropagator prop(psi.grid_ptr(), pot, SwitchingSpec{}, cfg);
  State cur = psi;
  double t_prev = 0.0;
  for (const double t : times) {
    if (t < t_prev || (!tr.times.empty() && !(t > tr.times.back())))
      throw PreconditionError("observable trace times must increase from 0");
    cur = prop.propagate(cur, t_prev, t);
    t_prev = t;
    tr.times.push_back(t);
    tr.momentum.push_back(expect(cur, Observable::momentum));
    tr.position.push_back(expect(cur, Observable::position));
    tr.energy.push_back(expect_energy(cur, pot));
  }
  std::vector<double> lx, ly;
  const double last = tr.momentum.back();
  for (std::size_t j = 0; j + 1 < tr.times.size(); ++j) {
    const double d = std::abs(tr.momentum[j] - last);
    if (tr.times[j] > 0.0 && d > 1e-14) {
      lx.push_back(std::log(tr.times[j]));
      ly.push_back(std::log(d));
    }
  }
  if (lx.size() >= 2) {
    tr.convergence = fit_line(lx, ly);
    tr.convergence_valid = true;
  }
  return tr;
}

DriftFit fit_position_drift(std::span<const double> times,
                            std::span<const double> positions, double mass) {
  if (times.size() < 4 || times.size() != positions.size())
    throw PreconditionError("position drift fit needs >= 4 samples");
  std::vector<double> lin, lg, one(times.size(), 1.0);
  for (const double t : times) {
    if (!(t > 0.0))
      throw PreconditionError("position drift fit needs t > 0");
    lin.push_back(t / mass);
    lg.push_back(std::log(t));
  }
  const auto f = fit_linear({lin, lg, one}, positions);
  DriftFit d;
  d.asymptotic_momentum = f.coefficients[0];
  d.log_coefficient = f.coefficients[1];
  d.offset = f.coefficients[2];
  d.log_stderr = f.stderrs[1];
  d.residual = f.residual;
  return d;
}

DriftFit asymptotic_position_drift(const State &psi, std::span<const double> times,
                                   const PotentialSpec &pot,
                                   const StepperConfig &cfg,
                                   double residual_threshold) {
  const double m = psi.grid().mass();
  const double p = expect(psi, Observable::momentum);
  auto tr = asymptotic_momentum(psi, times, pot, cfg);
  auto d = fit_position_drift(tr.times, tr.position, m);
  d.flagged = !(p * p / (2.0 * m) > 3.0 * pot.max_value()) ||
              d.residual > residual_threshold;
  d.trace = std::move(tr);
  return d;
}

double energy_identity_residual(const State &phi, double T,
                                const PotentialSpec &pot, const StepperConfig &cfg,
                                ReferenceKind ref) {
  const auto omega_phi = moller(phi, T, pot, cfg, ref);
  return std::abs(expect_energy(omega_phi, pot) - expect(phi, Observable::kinetic));
}

MomentumCovariance momentum_covariance(const State &phi, double t, double T,
                                       const PotentialSpec &pot,
                                       const StepperConfig &cfg) {
  const auto omega_phi = moller(phi, T, pot, cfg, ReferenceKind::dollard);
  MomentumCovariance c;
  c.interacting = expect(full_propagate(omega_phi, 0.0, t, pot, SwitchingSpec{}, cfg),
                         Observable::momentum);
  c.free = expect(free_propagate(phi, t), Observable::momentum);
  c.reference = expect(phi, Observable::momentum);
  return c;
}

} // namespace dollard
