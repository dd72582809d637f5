#include "dollard/spectral_core.hpp"
#include "dollard/errors.hpp"
#include "dollard/fft_workspace.hpp"
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dollard {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void require_same_grid(const State &a, const State &b) {
  if (a.grid_ptr() != b.grid_ptr() && !(a.grid() == b.grid()))
    throw PreconditionError("states live on different grids");
}

} // namespace

Grid::Grid(std::size_t n, double box_length, double mass)
    : m_n(n), m_L(box_length), m_mass(mass), m_dx(box_length / double(n)),
      m_dk(two_pi / box_length), m_x(n), m_k(n) {
  for (std::size_t j = 0; j < n; ++j)
    m_x[j] = -0.5 * m_L + double(j) * m_dx;
  for (std::size_t m = 0; m < n; ++m) {
    const auto s = m <= n / 2 ? double(m) : double(m) - double(n);
    m_k[m] = s * m_dk;
  }
}

double Grid::k_max() const { return std::numbers::pi / m_dx; }

double Grid::max_kinetic() const { return k_max() * k_max() / (2.0 * m_mass); }

GridPtr make_grid(std::size_t n, double box_length, double mass) {
  if (n < 8 || !is_power_of_two(n))
    throw ConfigError("grid.n must be a power of two >= 8, got " +
                      std::to_string(n));
  if (!(box_length > 0.0))
    throw ConfigError("grid.box_length must be positive");
  if (!(mass > 0.0))
    throw ConfigError("grid.mass must be positive");
  return std::make_shared<const Grid>(n, box_length, mass);
}

//------------------------------------------------------------------------------
State::State(GridPtr grid, Representation rep, CVector amplitudes)
    : m_grid(std::move(grid)), m_rep(rep), m_amp(std::move(amplitudes)) {
  if (!m_grid)
    throw PreconditionError("state without grid");
  if (m_amp.size() != m_grid->size())
    throw PreconditionError("amplitude count does not match grid size");
}

double State::measure() const {
  return m_rep == Representation::position ? m_grid->dx() : m_grid->dk();
}

State State::to_momentum() const {
  if (m_rep == Representation::momentum)
    return *this;
  const auto n = m_grid->size();
  auto &ws = FftWorkspace::for_thread(n);
  auto buf = ws.buffer();
  std::copy(m_amp.begin(), m_amp.end(), buf.begin());
  ws.forward();
  // The lattice starts at -L/2, so e^{-i k_m x_0} = (-1)^m.
  const double scale = m_grid->dx() / std::sqrt(two_pi);
  CVector out(n);
  for (std::size_t m = 0; m < n; ++m)
    out[m] = (m % 2 == 0 ? scale : -scale) * buf[m];
  return State(m_grid, Representation::momentum, std::move(out));
}

State State::to_position() const {
  if (m_rep == Representation::position)
    return *this;
  const auto n = m_grid->size();
  auto &ws = FftWorkspace::for_thread(n);
  auto buf = ws.buffer();
  for (std::size_t m = 0; m < n; ++m)
    buf[m] = m % 2 == 0 ? m_amp[m] : -m_amp[m];
  ws.backward();
  const double scale = m_grid->dk() / std::sqrt(two_pi);
  CVector out(n);
  for (std::size_t j = 0; j < n; ++j)
    out[j] = scale * buf[j];
  return State(m_grid, Representation::position, std::move(out));
}

State State::in(Representation rep) const {
  return rep == Representation::position ? to_position() : to_momentum();
}

double State::norm() const {
  double s = 0.0;
  for (const auto &a : m_amp)
    s += std::norm(a);
  return std::sqrt(s * measure());
}

//------------------------------------------------------------------------------
State gaussian_packet(const GridPtr &grid, const PacketSpec &spec) {
  if (!grid)
    throw PreconditionError("gaussian_packet: null grid");
  if (!(spec.sigma > 0.0))
    throw ConfigError("packet sigma must be positive");
  const double half = 0.5 * grid->box_length();
  const double reach = std::abs(spec.x0) + 6.0 * spec.sigma;
  if (!(reach < half)) {
    std::ostringstream os;
    os << "packet position support |x0| + 6 sigma = " << reach
       << " exceeds L/2 = " << half << " (short by " << reach - half << ")";
    throw ConfigError(os.str());
  }
  const double kreach = std::abs(spec.p0) + 6.0 / spec.sigma;
  if (!(kreach < grid->k_max())) {
    std::ostringstream os;
    os << "packet momentum support |p0| + 6/sigma = " << kreach
       << " exceeds pi/dx = " << grid->k_max() << " (short by "
       << kreach - grid->k_max() << ")";
    throw ConfigError(os.str());
  }
  const auto n = grid->size();
  CVector amp(n);
  const double s2 = spec.sigma * spec.sigma;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid->x(j);
    const double d = x - spec.x0;
    amp[j] = std::polar(std::exp(-d * d / (4.0 * s2)), spec.p0 * x);
  }
  double sum = 0.0;
  for (const auto &a : amp)
    sum += std::norm(a);
  const double scale = 1.0 / std::sqrt(sum * grid->dx());
  for (auto &a : amp)
    a *= scale;
  return State(grid, Representation::position, std::move(amp));
}

void require_momentum_clearance(const PacketSpec &spec, double p_min) {
  if (std::abs(spec.p0) < p_min) {
    std::ostringstream os;
    os << "momentum clearance rule |p0| >= p_min violated: |p0| = "
       << std::abs(spec.p0) << " < p_min = " << p_min;
    throw ConfigError(os.str());
  }
}

//------------------------------------------------------------------------------
namespace {

cplx diagonal_element(const State &s, std::span<const double> f) {
  cplx acc{0.0, 0.0};
  const auto amp = s.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i)
    acc += std::conj(amp[i]) * (f[i] * amp[i]);
  return acc * s.measure();
}

double checked_real(cplx v) {
  if (std::abs(v.imag()) > 1e-12 * std::max(1.0, std::abs(v.real())))
    throw PreconditionError("expectation of Hermitian observable not real");
  return v.real();
}

} // namespace

double zero_momentum_weight(const State &state) {
  const auto mom = state.to_momentum();
  return std::norm(mom.amplitudes()[0]) * mom.measure();
}

double expect(const State &state, Observable obs) {
  const auto &g = state.grid();
  const auto n = g.size();
  std::vector<double> f(n);
  switch (obs) {
  case Observable::position:
  case Observable::position_squared: {
    for (std::size_t j = 0; j < n; ++j)
      f[j] = obs == Observable::position ? g.x(j) : g.x(j) * g.x(j);
    return checked_real(diagonal_element(state.to_position(), f));
  }
  case Observable::momentum:
  case Observable::momentum_squared:
  case Observable::kinetic:
    for (std::size_t m = 0; m < n; ++m) {
      const double k = g.k(m);
      f[m] = obs == Observable::momentum           ? k
             : obs == Observable::momentum_squared ? k * k
                                                   : k * k / (2.0 * g.mass());
    }
    // The Nyquist bin stands for both +pi/dx and -pi/dx; an odd function
    // averages to zero there.
    if (obs == Observable::momentum)
      f[n / 2] = 0.0;
    return checked_real(diagonal_element(state.to_momentum(), f));
  case Observable::momentum_inverse_abs: {
    const auto mom = state.to_momentum();
    const double w0 = std::norm(mom.amplitudes()[0]) * mom.measure();
    if (w0 > 1e-8)
      throw PreconditionError("1/|p| expectation: weight " +
                              std::to_string(w0) + " in the k = 0 bin");
    for (std::size_t m = 1; m < n; ++m)
      f[m] = 1.0 / std::abs(g.k(m));
    f[0] = 0.0;
    return checked_real(diagonal_element(mom, f));
  }
  }
  throw PreconditionError("unknown observable");
}

double expect_position_function(const State &state,
                                std::span<const double> f) {
  if (f.size() != state.grid().size())
    throw PreconditionError("function sample count does not match grid");
  return checked_real(diagonal_element(state.to_position(), f));
}

cplx overlap(const State &a, const State &b) {
  require_same_grid(a, b);
  const auto bb = b.in(a.representation());
  const auto x = a.amplitudes();
  const auto y = bb.amplitudes();
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += std::conj(x[i]) * y[i];
  return acc * a.measure();
}

double distance(const State &a, const State &b) {
  require_same_grid(a, b);
  const auto bb = b.in(a.representation());
  const auto x = a.amplitudes();
  const auto y = bb.amplitudes();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += std::norm(x[i] - y[i]);
  return std::sqrt(acc * a.measure());
}

State apply_momentum_phase(const State &state, std::span<const double> phase) {
  auto mom = state.to_momentum();
  if (phase.size() != mom.grid().size())
    throw PreconditionError("phase sample count does not match grid");
  const auto a = mom.amplitudes();
  CVector out(a.size());
  for (std::size_t m = 0; m < a.size(); ++m)
    out[m] = std::polar(1.0, phase[m]) * a[m];
  return State(mom.grid_ptr(), Representation::momentum, std::move(out));
}

State conjugate(const State &state) {
  const auto pos = state.to_position();
  CVector out(pos.amplitudes().begin(), pos.amplitudes().end());
  for (auto &a : out)
    a = std::conj(a);
  return State(pos.grid_ptr(), Representation::position, std::move(out));
}

State rotate_phase(const State &state, double theta) {
  CVector out(state.amplitudes().begin(), state.amplitudes().end());
  const auto r = std::polar(1.0, theta);
  for (auto &a : out)
    a *= r;
  return State(state.grid_ptr(), state.representation(), std::move(out));
}

} // namespace dollard
