#include "dollard/adiabatic.hpp"
#include "dollard/errors.hpp"
#include "dollard/parallel.hpp"
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dollard {

double switch_off_horizon(double epsilon, double origin_shift, double tolerance) {
  if (!(epsilon > 0.0))
    throw ConfigError("switch-off horizon needs epsilon > 0");
  return std::log(1.0 / tolerance) / epsilon + std::abs(origin_shift);
}

void check_switch_off(const SwitchingSpec &sw, double T) {
  if (!(sw.epsilon > 0.0))
    throw ConfigError("adiabatic S-matrix needs epsilon > 0");
  const double residual = std::exp(-sw.epsilon * (T - std::abs(sw.origin_shift)));
  if (!(residual < 1e-8)) {
    std::ostringstream os;
    os << "eps T too small: coupling e^{-eps(T - |t0|)} = " << residual
       << " at T = " << T << " (need < 1e-8, i.e. T >= "
       << switch_off_horizon(sw.epsilon, sw.origin_shift) << ")";
    throw ConfigError(os.str());
  }
}

State adiabatic_standard_s(const State &psi, double T, const SwitchingSpec &sw,
                           const PotentialSpec &pot, const StepperConfig &cfg,
                           PropagationStats *stats) {
  check_switch_off(sw, T);
  return s_matrix_on_packet(psi, T, pot, sw, cfg, ReferenceKind::free, stats);
}

std::vector<double> ir_dressing_phase(const Grid &grid, double alpha, double epsilon) {
  std::vector<double> phase(grid.size(), 0.0);
  if (epsilon == 0.0 || alpha == 0.0)
    return phase;
  const double L = switching_integral(epsilon, std::numeric_limits<double>::infinity());
  for (std::size_t m = 1; m < grid.size(); ++m)
    phase[m] = L * alpha * grid.mass() / std::abs(grid.k(m));
  return phase;
}

State factorized_s(const State &psi, double T, const SwitchingSpec &sw,
                   const PotentialSpec &pot, const StepperConfig &cfg,
                   PropagationStats *stats) {
  if (sw.epsilon == 0.0)
    return s_matrix_on_packet(psi, T, pot, sw, cfg, ReferenceKind::free, stats);
  check_switch_off(sw, T);
  const auto dress = ir_dressing_phase(psi.grid(), pot.alpha, sw.epsilon);
  const auto s0 = adiabatic_standard_s(apply_momentum_phase(psi, dress), T, sw, pot,
                                       cfg, stats);
  return apply_momentum_phase(s0, dress);
}

IRReport adiabatic_ir_report(const State &psi, std::span<const double> epsilons,
                             const PotentialSpec &pot, const StepperConfig &cfg,
                             double origin_shift, std::size_t workers,
                             double fixed_horizon) {
  const auto K = epsilons.size();
  if (K < 2)
    throw PreconditionError("IR report needs >= 2 epsilons");
  auto horizon = [&](double eps) {
    return fixed_horizon > 0.0 ? fixed_horizon : switch_off_horizon(eps, origin_shift);
  };
  // Two independent runs per epsilon; flatten so both parallelise.
  auto runs = parallel_map(2 * K, workers, [&](std::size_t i) {
    const std::size_t j = i / 2;
    const SwitchingSpec sw{epsilons[j], origin_shift};
    const double T = horizon(epsilons[j]);
    PropagationStats st;
    auto out = i % 2 == 0 ? adiabatic_standard_s(psi, T, sw, pot, cfg, &st)
                          : factorized_s(psi, T, sw, pot, cfg, &st);
    return std::make_pair(std::move(out), st);
  });

  IRReport r;
  const double n0 = psi.norm();
  double prev_raw = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    if (j > 0 && !(epsilons[j] < epsilons[j - 1]))
      throw PreconditionError("IR epsilon schedule must decrease");
    r.epsilons.push_back(epsilons[j]);
    r.horizons.push_back(horizon(epsilons[j]));
    auto &s0 = runs[2 * j].first;
    auto &sf = runs[2 * j + 1].first;
    r.steps += runs[2 * j].second.steps + runs[2 * j + 1].second.steps;
    const auto ov = overlap(psi, s0);
    const double raw = std::arg(ov);
    r.moduli.push_back(std::abs(ov));
    r.phases.push_back(j == 0 ? raw : r.phases.back() + wrap_phase(raw - prev_raw));
    prev_raw = raw;
    r.norm_drift.push_back(
        std::max(std::abs(s0.norm() - n0), std::abs(sf.norm() - n0)));
    r.undressed.push_back(std::move(s0));
    r.factorized.push_back(std::move(sf));
  }
  for (std::size_t j = 0; j + 1 < K; ++j) {
    r.undressed_cauchy.push_back(distance(r.undressed[j + 1], r.undressed[j]));
    r.factorized_cauchy.push_back(distance(r.factorized[j + 1], r.factorized[j]));
  }
  return r;
}

IRSlopeFit ir_slope_fit(std::span<const double> epsilons,
                        std::span<const double> phases) {
  if (epsilons.size() < 4 || phases.size() != epsilons.size())
    throw PreconditionError("IR slope fit needs >= 4 epsilon points");
  std::vector<double> x;
  for (const double e : epsilons)
    x.push_back(std::log(1.0 / e));
  const auto line = fit_line(x, phases);
  IRSlopeFit f{line.slope, line.intercept, line.residual, false};
  for (std::size_t j = 0; j + 1 < phases.size(); ++j)
    if (std::abs(phases[j + 1] - phases[j]) > 0.5 * std::numbers::pi)
      f.ambiguous = true;
  return f;
}

IRSlopeFit ir_slope_fit(const IRReport &report) {
  return ir_slope_fit(report.epsilons, report.phases);
}

double dressing_slope_prediction(const State &psi, double alpha,
                                 std::span<const double> epsilons) {
  std::vector<double> phases;
  double prev = 0.0;
  for (const double e : epsilons) {
    auto dress = ir_dressing_phase(psi.grid(), alpha, e);
    for (auto &d : dress)
      d *= -2.0;
    const double raw = std::arg(overlap(psi, apply_momentum_phase(psi, dress)));
    phases.push_back(phases.empty() ? raw : phases.back() + wrap_phase(raw - prev));
    prev = raw;
  }
  return ir_slope_fit(epsilons, phases).slope;
}

double switching_shift_check(const State &psi, double T, const SwitchingSpec &sw,
                             const PotentialSpec &pot, const StepperConfig &cfg) {
  if (std::abs(sw.origin_shift) > 10.0)
    throw PreconditionError("switching shift check needs |t0| <= 10");
  if (sw.origin_shift == 0.0)
    return 0.0;
  const auto shifted = factorized_s(psi, T, sw, pot, cfg);
  const auto base = factorized_s(psi, T, SwitchingSpec{sw.epsilon, 0.0}, pot, cfg);
  return distance(shifted, base);
}

} // namespace dollard
