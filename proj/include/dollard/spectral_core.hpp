#pragma once
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

//! Uniform periodic grids, wavefunctions in position/momentum representation,
//! Gaussian probe packets and expectation values. Units: hbar = 1.
namespace dollard {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

//! Uniform periodic lattice x_j = -L/2 + j dx, j = 0..n-1, and its dual
//! momentum lattice k_m in (-pi/dx, pi/dx], stored in FFT order
//! (k_m = m dk for m <= n/2, (m - n) dk otherwise).
class Grid {
public:
  Grid(std::size_t n, double box_length, double mass);

  std::size_t size() const { return m_n; }
  double box_length() const { return m_L; }
  double mass() const { return m_mass; }
  double dx() const { return m_dx; }
  double dk() const { return m_dk; }
  double k_max() const;          // Nyquist momentum, pi/dx
  double max_kinetic() const;    // k_max^2 / 2m
  double x(std::size_t j) const { return m_x[j]; }
  double k(std::size_t m) const { return m_k[m]; }
  std::span<const double> positions() const { return m_x; }
  std::span<const double> momenta() const { return m_k; }

  bool operator==(const Grid &o) const {
    return m_n == o.m_n && m_L == o.m_L && m_mass == o.m_mass;
  }

private:
  std::size_t m_n;
  double m_L, m_mass, m_dx, m_dk;
  std::vector<double> m_x, m_k;
};

using GridPtr = std::shared_ptr<const Grid>;

//! Throws ConfigError unless n is a power of two >= 8 and L, mass > 0.
GridPtr make_grid(std::size_t n, double box_length, double mass = 1.0);

enum class Representation { position, momentum };

//! Immutable wavefunction sample on a grid. Measure: sum |psi_j|^2 dx in
//! position space, sum |phi_m|^2 dk in momentum space, with the unitary
//! transform phi(k) = (2 pi)^{-1/2} integral psi(x) e^{-ikx} dx.
class State {
public:
  State(GridPtr grid, Representation rep, CVector amplitudes);

  const Grid &grid() const { return *m_grid; }
  const GridPtr &grid_ptr() const { return m_grid; }
  Representation representation() const { return m_rep; }
  std::span<const cplx> amplitudes() const { return m_amp; }
  //! dx or dk, depending on the representation.
  double measure() const;

  State to_position() const;
  State to_momentum() const;
  State in(Representation rep) const;

  double norm() const;

private:
  GridPtr m_grid;
  Representation m_rep;
  CVector m_amp;
};

struct PacketSpec {
  double x0 = 0.0;
  double p0 = 0.0;
  double sigma = 1.0;
};

//! Normalised psi(x) ~ exp(-(x - x0)^2 / (4 sigma^2) + i p0 x) in position
//! representation. Requires |x0| + 6 sigma < L/2 and |p0| + 6/sigma < pi/dx.
State gaussian_packet(const GridPtr &grid, const PacketSpec &spec);

//! Throws ConfigError if |p0| < p_min: scattering probes keep their momentum
//! support away from k = 0 where the Dollard symbol 1/|k| is singular.
void require_momentum_clearance(const PacketSpec &spec, double p_min);

enum class Observable {
  position,
  position_squared,
  momentum,
  momentum_squared,
  kinetic,
  momentum_inverse_abs,
};

//! <psi, A psi> for an observable diagonal in position or momentum space.
//! momentum_inverse_abs requires weight <= 1e-8 in the k = 0 bin. The
//! momentum observable gives the Nyquist bin zero weight (it is its own
//! mirror image), so real wavefunctions have exactly zero current.
double expect(const State &state, Observable obs);

//! <psi, f(x) psi> for a real function sampled on the grid points.
double expect_position_function(const State &state, std::span<const double> f);

//! Probability carried by the k = 0 bin, |phi_0|^2 dk.
double zero_momentum_weight(const State &state);

//! <a, b> = sum conj(a_j) b_j * measure; b is converted to a's representation.
cplx overlap(const State &a, const State &b);
double distance(const State &a, const State &b);

//! e^{i phase(k_m)} phi(k_m); the result is in momentum representation.
State apply_momentum_phase(const State &state, std::span<const double> phase);

//! Complex conjugation in position space (time reversal for real potentials).
State conjugate(const State &state);

//! Pure phase multiple e^{i theta} psi, same representation.
State rotate_phase(const State &state, double theta);

} // namespace dollard
