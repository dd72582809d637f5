#include "dollard/oracle.hpp"
#include "dollard/errors.hpp"
#include <cmath>
#include <numbers>

namespace dollard::oracle {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

MatrixXcd dft_matrix(const Grid &grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  MatrixXcd w(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index m = 0; m < n; ++m)
    for (Eigen::Index j = 0; j < n; ++j)
      w(m, j) = std::polar(s, -grid.k(m) * grid.x(j));
  return w;
}

VectorXcd orthonormal_position(const State &state) {
  const auto pos = state.to_position();
  const auto a = pos.amplitudes();
  VectorXcd u(static_cast<Eigen::Index>(a.size()));
  const double s = std::sqrt(pos.measure());
  for (std::size_t j = 0; j < a.size(); ++j)
    u(static_cast<Eigen::Index>(j)) = a[j] * s;
  return u;
}

State from_orthonormal_position(const GridPtr &grid, const VectorXcd &u) {
  CVector amp(static_cast<std::size_t>(u.size()));
  const double s = 1.0 / std::sqrt(grid->dx());
  for (std::size_t j = 0; j < amp.size(); ++j)
    amp[j] = u(static_cast<Eigen::Index>(j)) * s;
  return State(grid, Representation::position, std::move(amp));
}

DenseEvolution::DenseEvolution(GridPtr grid, const PotentialSpec &pot)
    : m_grid(std::move(grid)), m_dft(dft_matrix(*m_grid)) {
  const auto n = static_cast<Eigen::Index>(m_grid->size());
  if (n > 1024)
    throw PreconditionError("dense oracle is limited to n <= 1024");
  Eigen::VectorXd kin(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const double k = m_grid->k(static_cast<std::size_t>(m));
    kin(m) = k * k / (2.0 * m_grid->mass());
  }
  m_h = m_dft.adjoint() * kin.asDiagonal() * m_dft;
  for (Eigen::Index j = 0; j < n; ++j)
    m_h(j, j) += pot(m_grid->x(static_cast<std::size_t>(j)));
  m_h = 0.5 * (m_h + m_h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(m_h);
  if (eig.info() != Eigen::Success)
    throw PreconditionError("dense oracle eigendecomposition failed");
  m_vectors = eig.eigenvectors();
  m_energies = eig.eigenvalues();
}

State DenseEvolution::evolve(const State &state, double t) const {
  VectorXcd c = m_vectors.adjoint() * orthonormal_position(state);
  for (Eigen::Index i = 0; i < c.size(); ++i)
    c(i) *= std::polar(1.0, -m_energies(i) * t);
  return from_orthonormal_position(m_grid, m_vectors * c);
}

State DenseEvolution::momentum_phase(const State &state,
                                     std::span<const double> phase) const {
  VectorXcd v = m_dft * orthonormal_position(state);
  for (Eigen::Index m = 0; m < v.size(); ++m)
    v(m) *= std::polar(1.0, phase[static_cast<std::size_t>(m)]);
  return from_orthonormal_position(m_grid, m_dft.adjoint() * v);
}

std::vector<double> reference_phase(const Grid &grid, double t, double alpha,
                                    bool use_dollard) {
  std::vector<double> ph(grid.size());
  const double m = grid.mass();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double k = grid.k(i);
    ph[i] = -k * k * t / (2.0 * m);
    if (use_dollard && k != 0.0 && t != 0.0) {
      const double ak = std::abs(k);
      ph[i] -= (t > 0 ? 1.0 : -1.0) * alpha * m / ak * std::log(1.0 + ak * std::abs(t) / m);
    }
  }
  return ph;
}

State dense_s_matrix(const DenseEvolution &evo, const State &psi, double T,
                     double alpha, bool use_dollard) {
  const auto &grid = psi.grid();
  const auto before = reference_phase(grid, -T, alpha, use_dollard);
  auto after = reference_phase(grid, T, alpha, use_dollard);
  for (auto &a : after)
    a = -a;
  auto s = evo.momentum_phase(psi, before);
  s = evo.evolve(s, 2.0 * T);
  return evo.momentum_phase(s, after);
}

ClassicalTrajectory classical_trajectory(double x0, double p0, double mass,
                                         const PotentialSpec &pot,
                                         std::span<const double> times, double dt) {
  if (!(dt > 0.0) || !(mass > 0.0))
    throw PreconditionError("classical trajectory needs dt > 0 and mass > 0");
  ClassicalTrajectory tr;
  double t = 0.0, x = x0, p = p0;
  auto force = [&](double y) { return -pot.derivative(y); };
  auto step = [&](double h) {
    const double k1x = p / mass, k1p = force(x);
    const double k2x = (p + 0.5 * h * k1p) / mass, k2p = force(x + 0.5 * h * k1x);
    const double k3x = (p + 0.5 * h * k2p) / mass, k3p = force(x + 0.5 * h * k2x);
    const double k4x = (p + h * k3p) / mass, k4p = force(x + h * k3x);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    t += h;
  };
  for (const double target : times) {
    if (target < t - 1e-12)
      throw PreconditionError("classical trajectory times must increase from 0");
    const auto steps = static_cast<std::size_t>(std::ceil((target - t) / dt - 1e-9));
    const double h = steps ? (target - t) / static_cast<double>(steps) : 0.0;
    for (std::size_t i = 0; i < steps; ++i)
      step(h);
    t = target;
    tr.times.push_back(target);
    tr.position.push_back(x);
    tr.momentum.push_back(p);
  }
  return tr;
}

double cook_bound(const State &psi, const PotentialSpec &pot, double t1, double t2,
                  std::size_t intervals) {
  if (!(t1 > 0.0) || !(t2 > t1))
    throw PreconditionError("Cook bound needs 0 < t1 < t2");
  if (intervals % 2)
    ++intervals;
  const auto v = sample_potential(psi.grid(), pot);
  auto integrand = [&](double u) {
    const double t = std::exp(u);
    const auto pos = free_propagate(psi, t).to_position();
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
      s += std::norm(v[j] * pos.amplitudes()[j]);
    return std::sqrt(s * pos.measure()) * t;
  };
  const double a = std::log(t1), b = std::log(t2), h = (b - a) / double(intervals);
  double sum = integrand(a) + integrand(b);
  for (std::size_t i = 1; i < intervals; ++i)
    sum += (i % 2 ? 4.0 : 2.0) * integrand(a + double(i) * h);
  return sum * h / 3.0;
}

} // namespace dollard::oracle
