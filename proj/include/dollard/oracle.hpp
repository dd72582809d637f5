#pragma once
#include "dollard/dynamics.hpp"
#include <Eigen/Dense>
#include <span>
#include <vector>

//! Brute-force references for small grids and classical kinematics. The
//! dense propagator uses explicit DFT matrices and an eigendecomposition of
//! H; it shares no code with FFTW or the split-step integrator.
namespace dollard::oracle {

//! Unitary DFT between orthonormal position coordinates u_j = psi_j sqrt(dx)
//! and momentum coordinates v_m = phi_m sqrt(dk), momenta in grid order.
Eigen::MatrixXcd dft_matrix(const Grid &grid);

Eigen::VectorXcd orthonormal_position(const State &state);
State from_orthonormal_position(const GridPtr &grid, const Eigen::VectorXcd &u);

//! e^{-iHt} for the time-independent H = p^2/2m + V on a small grid.
class DenseEvolution {
public:
  DenseEvolution(GridPtr grid, const PotentialSpec &pot);

  State evolve(const State &state, double t) const;
  //! Momentum-diagonal phase e^{i phase(k)} applied through the dense DFT.
  State momentum_phase(const State &state, std::span<const double> phase) const;
  const Eigen::VectorXd &energies() const { return m_energies; }
  const Eigen::MatrixXcd &hamiltonian() const { return m_h; }

private:
  GridPtr m_grid;
  Eigen::MatrixXcd m_dft;
  Eigen::MatrixXcd m_h;
  Eigen::MatrixXcd m_vectors;
  Eigen::VectorXd m_energies;
};

//! Free phase -k^2 t/2m plus, for use_dollard, the smooth Dollard phase
//! -sign(t)(alpha m/|k|) ln(1 + |k||t|/m); zero Dollard phase at k = 0.
std::vector<double> reference_phase(const Grid &grid, double t, double alpha,
                                    bool use_dollard);

//! U_ref(T)^{-1} e^{-iH 2T} U_ref(-T) psi with dense H.
State dense_s_matrix(const DenseEvolution &evo, const State &psi, double T,
                     double alpha, bool use_dollard);

struct ClassicalTrajectory {
  std::vector<double> times;
  std::vector<double> position;
  std::vector<double> momentum;
};

//! RK4 for m x'' = -V'(x) from (x0, p0) at t = 0, sampled at the increasing,
//! non-negative times.
ClassicalTrajectory classical_trajectory(double x0, double p0, double mass,
                                         const PotentialSpec &pot,
                                         std::span<const double> times, double dt);

//! Cook-method bound on || Omega_free(t2) psi - Omega_free(t1) psi ||:
//! the integral of || V U_0(t) psi || over [t1, t2], 0 < t1 < t2, by
//! composite Simpson in ln t.
double cook_bound(const State &psi, const PotentialSpec &pot, double t1, double t2,
                  std::size_t intervals = 64);

} // namespace dollard::oracle
