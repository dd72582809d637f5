#include "dollard/moller.hpp"
#include "dollard/errors.hpp"
#include "dollard/parallel.hpp"
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dollard {

std::vector<double> reference_phase(const Grid &grid, double t, ReferenceKind ref,
                                    double alpha, const SwitchingSpec &sw) {
  std::vector<double> phase;
  switch (ref) {
  case ReferenceKind::free:
    phase.assign(grid.size(), 0.0);
    break;
  case ReferenceKind::dollard:
    phase = dollard_phase(grid, t, alpha);
    break;
  case ReferenceKind::adiabatic_dollard:
    phase = adiabatic_dollard_phase(grid, t, alpha, sw.epsilon);
    break;
  }
  for (std::size_t m = 0; m < grid.size(); ++m)
    phase[m] -= grid.k(m) * grid.k(m) * t / (2.0 * grid.mass());
  return phase;
}

State reference_propagate(const State &state, double t, ReferenceKind ref,
                          double alpha, const SwitchingSpec &sw) {
  return apply_momentum_phase(state,
                              reference_phase(state.grid(), t, ref, alpha, sw));
}

State reference_unpropagate(const State &state, double t, ReferenceKind ref,
                            double alpha, const SwitchingSpec &sw) {
  auto phase = reference_phase(state.grid(), t, ref, alpha, sw);
  for (auto &p : phase)
    p = -p;
  return apply_momentum_phase(state, phase);
}

void preflight_transport(const State &probe, double horizon,
                         const StepperConfig &cfg) {
  const auto &g = probe.grid();
  const double n2 = probe.norm() * probe.norm();
  const double x = expect(probe, Observable::position) / n2;
  const double p = expect(probe, Observable::momentum) / n2;
  const double dx =
      std::sqrt(std::max(0.0, expect(probe, Observable::position_squared) / n2 - x * x));
  const double dp =
      std::sqrt(std::max(0.0, expect(probe, Observable::momentum_squared) / n2 - p * p));
  const double T = std::abs(horizon);
  const double centre = std::max(std::abs(x), std::abs(x + p * horizon / g.mass()));
  const double reach = centre + 6.0 * (dx + dp * T / g.mass());
  const double window = monitored_half_width(g, cfg);
  if (!(reach < window)) {
    std::ostringstream os;
    os << "preflight failure: packet envelope reaches |x| = " << reach
       << " by t = " << horizon << ", monitored window is |x| <= " << window;
    throw ConfigError(os.str());
  }
}

State moller_approximant(const MollerJob &job, PropagationStats *stats) {
  if (!(job.horizon > 0.0))
    throw ConfigError("Moller horizon must be positive");
  const double T = job.direction == Direction::out ? job.horizon : -job.horizon;
  if (job.cfg.monitor_support)
    preflight_transport(job.probe, T, job.cfg);
  const auto at_T =
      reference_propagate(job.probe, T, job.reference, job.pot.alpha, job.sw);
  return full_propagate(at_T, T, 0.0, job.pot, job.sw, job.cfg, stats);
}

ConvergenceReport assemble_report(std::span<const double> schedule,
                                  std::span<const State> approximants,
                                  double probe_norm) {
  const auto K = schedule.size();
  if (K < 2 || approximants.size() != K)
    throw PreconditionError("Cauchy report needs >= 2 horizons and one state each");
  ConvergenceReport r;
  r.schedule.assign(schedule.begin(), schedule.end());
  r.cumulative_phases.push_back(0.0);
  for (std::size_t j = 0; j < K; ++j)
    r.norm_drift.push_back(std::abs(approximants[j].norm() - probe_norm));
  for (std::size_t j = 0; j + 1 < K; ++j) {
    if (!(schedule[j + 1] > schedule[j]))
      throw PreconditionError("Cauchy schedule must be strictly increasing");
    r.pair_distances.push_back(distance(approximants[j + 1], approximants[j]));
    const double theta = std::arg(overlap(approximants[j], approximants[j + 1]));
    r.pair_overlap_phases.push_back(theta);
    r.cumulative_phases.push_back(r.cumulative_phases.back() + theta);
  }

  // Distances at roundoff level carry no rate information.
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j + 1 < K; ++j) {
    const double d = r.pair_distances[j];
    if (std::isfinite(d) && d > 1e-12) {
      lx.push_back(std::log(schedule[j]));
      ly.push_back(std::log(d));
    }
  }
  r.extrapolated_tail = std::numeric_limits<double>::quiet_NaN();
  if (lx.size() >= 2) {
    r.decay_fit = fit_line(lx, ly);
    r.decay_fit_valid = true;
    if (r.decay_fit.slope < 0.0) {
      const double q = schedule[K - 1] / schedule[K - 2];
      const double ratio = std::pow(q, r.decay_fit.slope);
      r.extrapolated_tail = r.pair_distances.back() * ratio / (1.0 - ratio);
    }
  }
  if (K >= 4)
    r.log_fit = log_phase_fit(r);
  return r;
}

ConvergenceReport cauchy_diagnostic(const MollerJob &family,
                                    std::span<const double> schedule,
                                    std::size_t workers) {
  std::vector<PropagationStats> stats(schedule.size());
  auto states = parallel_map(schedule.size(), workers, [&](std::size_t j) {
    MollerJob job = family;
    job.horizon = schedule[j];
    return moller_approximant(job, &stats[j]);
  });
  auto r = assemble_report(schedule, states, family.probe.norm());
  for (const auto &s : stats)
    r.steps += s.steps;
  return r;
}

PhaseFit log_phase_fit(const ConvergenceReport &report) {
  const auto K = report.schedule.size();
  if (K < 4 || report.cumulative_phases.size() != K)
    throw PreconditionError("log-phase fit needs >= 4 schedule points");
  std::vector<double> lt(K);
  for (std::size_t j = 0; j < K; ++j)
    lt[j] = std::log(report.schedule[j]);
  const auto line = fit_line(lt, report.cumulative_phases);
  PhaseFit f{line.slope, line.intercept, line.residual, false};
  const auto &th = report.pair_overlap_phases;
  for (std::size_t j = 0; j + 1 < th.size(); ++j)
    if (std::abs(th[j + 1] - th[j]) > 0.5 * std::numbers::pi)
      f.ambiguous = true;
  return f;
}

State s_matrix_on_packet(const State &psi_in, double horizon,
                         const PotentialSpec &pot, const SwitchingSpec &sw,
                         const StepperConfig &cfg, ReferenceKind ref,
                         PropagationStats *stats) {
  if (!(horizon > 0.0))
    throw ConfigError("S-matrix horizon must be positive");
  if (cfg.monitor_support) {
    preflight_transport(psi_in, -horizon, cfg);
    preflight_transport(psi_in, horizon, cfg);
  }
  const auto early = reference_propagate(psi_in, -horizon, ref, pot.alpha, sw);
  const auto late = full_propagate(early, -horizon, horizon, pot, sw, cfg, stats);
  return reference_unpropagate(late, horizon, ref, pot.alpha, sw);
}

} // namespace dollard
