#include "dollard/dynamics.hpp"
#include "dollard/errors.hpp"
#include "dollard/fft_workspace.hpp"
#include "dollard/switching.hpp"
#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace dollard {

namespace {
std::atomic<std::size_t> g_steps{0};
std::atomic<double> g_drift{0.0};

void g_drift_max(double d) {
  double cur = g_drift.load(std::memory_order_relaxed);
  while (d > cur && !g_drift.compare_exchange_weak(cur, d, std::memory_order_relaxed)) {
  }
}
} // namespace

PropagationStats global_propagation_stats() {
  return {g_steps.load(), g_drift.load()};
}

void reset_global_propagation_stats() {
  g_steps = 0;
  g_drift = 0.0;
}

double PotentialSpec::operator()(double x) const {
  const double r = std::sqrt(x * x + core_width * core_width);
  const double v = alpha / r;
  return kind == PotentialKind::coulomb_reg ? v
                                            : v * std::exp(-decay_scale * std::abs(x));
}

double PotentialSpec::derivative(double x) const {
  const double r2 = x * x + core_width * core_width;
  const double r = std::sqrt(r2);
  const double coul = -alpha * x / (r2 * r);
  if (kind == PotentialKind::coulomb_reg)
    return coul;
  const double e = std::exp(-decay_scale * std::abs(x));
  const double sgn = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
  return e * (coul - decay_scale * sgn * alpha / r);
}

double PotentialSpec::max_value() const { return alpha / core_width; }

void PotentialSpec::validate() const {
  if (!(core_width > 0.0))
    throw ConfigError("potential.core_width must be positive");
  if (kind == PotentialKind::short_range_control && !(decay_scale > 0.0))
    throw ConfigError("potential.decay_scale must be positive");
}

std::vector<double> sample_potential(const Grid &grid, const PotentialSpec &pot) {
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    v[j] = pot(grid.x(j));
  return v;
}

double expect_potential(const State &state, const PotentialSpec &pot) {
  return expect_position_function(state, sample_potential(state.grid(), pot));
}

double expect_energy(const State &state, const PotentialSpec &pot) {
  return expect(state, Observable::kinetic) + expect_potential(state, pot);
}

double SwitchingSpec::coupling(double t) const {
  if (epsilon == 0.0)
    return 1.0;
  return std::exp(-epsilon * std::abs(t + origin_shift));
}

void check_stability(const Grid &grid, const StepperConfig &cfg) {
  if (!(cfg.dt > 0.0))
    throw ConfigError("stepper.dt must be positive");
  const double g = cfg.dt * grid.max_kinetic();
  if (!(g < 0.5)) {
    std::ostringstream os;
    os << "stability guard dt * E_max < 0.5 violated: dt = " << cfg.dt
       << ", E_max = " << grid.max_kinetic() << ", dt * E_max = " << g;
    throw ConfigError(os.str());
  }
  if (cfg.record_stride == 0)
    throw ConfigError("stepper.record_stride must be positive");
}

double monitored_half_width(const Grid &grid, const StepperConfig &cfg) {
  const double margin = cfg.edge_margin > 0.0 ? cfg.edge_margin : 32.0 * grid.dx();
  return 0.5 * grid.box_length() - margin;
}

//------------------------------------------------------------------------------
State free_propagate(const State &state, double t) {
  const auto &g = state.grid();
  std::vector<double> phase(g.size());
  for (std::size_t m = 0; m < g.size(); ++m)
    phase[m] = -g.k(m) * g.k(m) * t / (2.0 * g.mass());
  return apply_momentum_phase(state, phase);
}

std::vector<double> dollard_phase(const Grid &grid, double t, double alpha) {
  const double m = grid.mass();
  const double sign = t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
  std::vector<double> phi(grid.size(), 0.0);
  if (alpha == 0.0 || t == 0.0)
    return phi;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double ak = std::abs(grid.k(i));
    phi[i] = -sign * (alpha * m / ak) * std::log1p(ak * std::abs(t) / m);
  }
  return phi;
}

State dollard_propagate(const State &state, double t, double alpha) {
  const auto &g = state.grid();
  auto phase = dollard_phase(g, t, alpha);
  for (std::size_t m = 0; m < g.size(); ++m)
    phase[m] -= g.k(m) * g.k(m) * t / (2.0 * g.mass());
  return apply_momentum_phase(state, phase);
}

std::vector<double> adiabatic_dollard_phase(const Grid &grid, double t,
                                            double alpha, double epsilon) {
  std::vector<double> phi(grid.size(), 0.0);
  const double L = switching_integral(epsilon, t);
  if (L == 0.0 || alpha == 0.0)
    return phi;
  for (std::size_t i = 1; i < grid.size(); ++i)
    phi[i] = -L * alpha * grid.mass() / std::abs(grid.k(i));
  return phi;
}

State adiabatic_dollard_propagate(const State &state, double t, double alpha,
                                  const SwitchingSpec &sw) {
  const auto &g = state.grid();
  auto phase = adiabatic_dollard_phase(g, t, alpha, sw.epsilon);
  for (std::size_t m = 0; m < g.size(); ++m)
    phase[m] -= g.k(m) * g.k(m) * t / (2.0 * g.mass());
  return apply_momentum_phase(state, phase);
}

//------------------------------------------------------------------------------
SplitStepPropagator::SplitStepPropagator(GridPtr grid, PotentialSpec pot,
                                         SwitchingSpec sw, StepperConfig cfg)
    : m_grid(std::move(grid)), m_pot(pot), m_sw(sw), m_cfg(cfg) {
  m_pot.validate();
  check_stability(*m_grid, m_cfg);
  if (sw.epsilon < 0.0)
    throw ConfigError("switching epsilon must be >= 0");
  m_v = sample_potential(*m_grid, m_pot);
  const double half = monitored_half_width(*m_grid, m_cfg);
  for (std::size_t j = 0; j < m_grid->size(); ++j)
    if (std::abs(m_grid->x(j)) > half)
      m_outside.push_back(j);
}

void SplitStepPropagator::prepare_kinetic(double h) {
  if (h == m_kin_h && !m_kin.empty())
    return;
  const auto n = m_grid->size();
  m_kin.resize(n);
  const double inv_n = 1.0 / double(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double k = m_grid->k(m);
    m_kin[m] = std::polar(inv_n, -k * k * h / (2.0 * m_grid->mass()));
  }
  m_kin_h = h;
}

void SplitStepPropagator::potential_phase(double weight, CVector &out) const {
  out.resize(m_v.size());
  for (std::size_t j = 0; j < m_v.size(); ++j)
    out[j] = std::polar(1.0, -m_v[j] * weight);
}

void SplitStepPropagator::check_support(std::span<const cplx> psi,
                                        double t) const {
  double leak = 0.0;
  for (auto j : m_outside)
    leak += std::norm(psi[j]);
  leak *= m_grid->dx();
  if (leak > m_cfg.leak_tolerance) {
    std::ostringstream os;
    os << "support margin violated at t = " << t << ": probability " << leak
       << " outside |x| <= " << monitored_half_width(*m_grid, m_cfg);
    throw SupportViolation(os.str(), t);
  }
}

State SplitStepPropagator::propagate(const State &state, double t_from,
                                     double t_to) {
  if (state.grid_ptr() != m_grid && !(state.grid() == *m_grid))
    throw PreconditionError("propagator and state use different grids");
  const double span = t_to - t_from;
  if (span == 0.0)
    return state;
  const auto steps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::abs(span) / m_cfg.dt - 1e-9)));
  const double h = span / double(steps);
  prepare_kinetic(h);
  if (m_sw.epsilon == 0.0 && (m_pot_h != h || m_pot_full.empty())) {
    potential_phase(h, m_pot_full);
    potential_phase(0.5 * h, m_pot_half);
    m_pot_h = h;
  }

  const auto n = m_grid->size();
  auto &ws = FftWorkspace::for_thread(n);
  auto buf = ws.buffer();
  const auto pos = state.to_position();
  std::copy(pos.amplitudes().begin(), pos.amplitudes().end(), buf.begin());
  const double norm_in = pos.norm();

  const bool switched = m_sw.epsilon != 0.0;
  auto mid = [&](std::size_t i) { return t_from + (double(i) + 0.5) * h; };
  CVector scratch;
  auto apply_potential = [&](double weight) {
    if (m_pot.alpha == 0.0 || weight == 0.0)
      return;
    const CVector *ph = &scratch;
    if (!switched)
      ph = weight == h ? &m_pot_full : &m_pot_half;
    else
      potential_phase(weight, scratch);
    for (std::size_t j = 0; j < n; ++j)
      buf[j] *= (*ph)[j];
  };

  apply_potential(0.5 * h * m_sw.coupling(mid(0)));
  for (std::size_t i = 0; i < steps; ++i) {
    ws.forward();
    for (std::size_t m = 0; m < n; ++m)
      buf[m] *= m_kin[m];
    ws.backward();
    const double gi = m_sw.coupling(mid(i));
    const double w = i + 1 < steps ? 0.5 * h * (gi + m_sw.coupling(mid(i + 1)))
                                   : 0.5 * h * gi;
    apply_potential(w);
    if (m_cfg.monitor_support &&
        ((i + 1) % m_cfg.record_stride == 0 || i + 1 == steps))
      check_support(buf, t_from + double(i + 1) * h);
  }
  m_stats.steps += steps;
  g_steps.fetch_add(steps, std::memory_order_relaxed);

  State out(m_grid, Representation::position, CVector(buf.begin(), buf.end()));
  const double drift = std::abs(out.norm() - norm_in);
  m_stats.max_norm_drift = std::max(m_stats.max_norm_drift, drift);
  g_drift_max(drift);
  return out;
}

State full_propagate(const State &state, double t_from, double t_to,
                     const PotentialSpec &pot, const SwitchingSpec &sw,
                     const StepperConfig &cfg, PropagationStats *stats) {
  SplitStepPropagator prop(state.grid_ptr(), pot, sw, cfg);
  auto out = prop.propagate(state, t_from, t_to);
  if (stats) {
    stats->steps += prop.stats().steps;
    stats->max_norm_drift = std::max(stats->max_norm_drift, prop.stats().max_norm_drift);
  }
  return out;
}

} // namespace dollard
