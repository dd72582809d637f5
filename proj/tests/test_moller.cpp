#include "dollard/errors.hpp"
#include "dollard/moller.hpp"
#include "dollard/oracle.hpp"
#include <catch_amalgamated.hpp>
#include <cmath>

using namespace dollard;

namespace {

PotentialSpec coulomb(double alpha = 0.5) { return {PotentialKind::coulomb_reg, alpha, 1.0, 0.5}; }

StepperConfig stepper(double dt, bool monitor = true) {
  StepperConfig c;
  c.dt = dt;
  c.monitor_support = monitor;
  return c;
}

} // namespace

TEST_CASE("reference families") {
  auto g = make_grid(256, 200.0);
  auto psi = gaussian_packet(g, {0, 1.5, 5});
  const SwitchingSpec sw{};
  CHECK(distance(reference_propagate(psi, 7.0, ReferenceKind::free, 0.5, sw),
                 free_propagate(psi, 7.0)) < 1e-13);
  for (auto ref : {ReferenceKind::free, ReferenceKind::dollard, ReferenceKind::adiabatic_dollard}) {
    auto there = reference_propagate(psi, 13.0, ref, 0.5, sw);
    CHECK(distance(reference_unpropagate(there, 13.0, ref, 0.5, sw), psi) < 1e-12);
  }
  // Dollard total phase against the independent closed form.
  const auto mine = reference_phase(*g, -9.0, ReferenceKind::dollard, 0.5, sw);
  const auto theirs = oracle::reference_phase(*g, -9.0, 0.5, true);
  double worst = 0.0;
  for (std::size_t m = 0; m < mine.size(); ++m)
    worst = std::max(worst, std::abs(std::remainder(mine[m] - theirs[m], 2 * M_PI)));
  CHECK(worst < 1e-12);
}

TEST_CASE("Moller approximant at zero coupling is the identity") {
  auto g = make_grid(1024, 800.0);
  auto psi = gaussian_packet(g, {0, 2, 8});
  for (auto ref : {ReferenceKind::free, ReferenceKind::dollard}) {
    MollerJob job{psi, 60.0, Direction::out, ref, coulomb(0.0), {}, stepper(0.05)};
    CHECK(distance(moller_approximant(job), psi) < 1e-10);
    job.direction = Direction::in;
    CHECK(distance(moller_approximant(job), psi) < 1e-10);
  }
}

TEST_CASE("Moller approximant is isometric") {
  auto g = make_grid(1024, 800.0);
  auto psi = gaussian_packet(g, {0, 2, 8});
  PropagationStats stats;
  MollerJob job{psi, 100.0, Direction::out, ReferenceKind::dollard, coulomb(), {}, stepper(0.05)};
  auto out = moller_approximant(job, &stats);
  CHECK(std::abs(out.norm() - psi.norm()) < 1e-10);
  CHECK(stats.steps == 2000);
}

TEST_CASE("preflight rejects horizons that carry the packet out of the box") {
  auto g = make_grid(512, 200.0);
  auto psi = gaussian_packet(g, {0, 2, 5});
  MollerJob job{psi, 100.0, Direction::out, ReferenceKind::dollard, coulomb(), {}, stepper(0.05)};
  CHECK_THROWS_WITH(moller_approximant(job), Catch::Matchers::ContainsSubstring("preflight failure"));
  CHECK_NOTHROW(preflight_transport(psi, 20.0, job.cfg));
  // Direction matters: a right-mover is safe at negative times for a while longer.
  auto left = gaussian_packet(g, {-30, 2, 5});
  CHECK_NOTHROW(preflight_transport(left, 20.0, job.cfg));
  CHECK_THROWS_AS(preflight_transport(left, -20.0, job.cfg), ConfigError);
}

TEST_CASE("report assembly recovers a planted logarithmic phase") {
  auto g = make_grid(256, 200.0);
  auto psi = gaussian_packet(g, {0, 1, 5});
  const std::vector<double> sched{16, 32, 64, 128, 256};
  const double c = -0.3;
  std::vector<State> approx;
  for (double T : sched)
    approx.push_back(rotate_phase(psi, c * std::log(T)));
  auto r = assemble_report(sched, approx, psi.norm());
  REQUIRE(r.pair_overlap_phases.size() == 4);
  for (double th : r.pair_overlap_phases)
    CHECK(th == Catch::Approx(c * std::log(2.0)).epsilon(1e-12));
  CHECK(r.log_fit.coefficient == Catch::Approx(c).epsilon(1e-10));
  CHECK_FALSE(r.log_fit.ambiguous);
  CHECK(r.cumulative_phases.front() == 0.0);
  for (double d : r.norm_drift)
    CHECK(d < 1e-13);
}

TEST_CASE("report assembly recovers a planted power-law decay") {
  auto g = make_grid(512, 400.0);
  auto psi = gaussian_packet(g, {-60, 1, 5});
  auto chi = gaussian_packet(g, {60, 1, 5});
  const std::vector<double> sched{16, 32, 64, 128, 256, 512};
  std::vector<State> approx;
  for (double T : sched) {
    const auto c = chi.to_position();
    const auto p = psi.to_position();
    CVector a(c.amplitudes().size());
    for (std::size_t j = 0; j < a.size(); ++j)
      a[j] = p.amplitudes()[j] + (3.0 / T) * c.amplitudes()[j];
    approx.emplace_back(g, Representation::position, std::move(a));
  }
  auto r = assemble_report(sched, approx, psi.norm());
  REQUIRE(r.decay_fit_valid);
  CHECK(r.decay_fit.slope == Catch::Approx(-1.0).margin(1e-9));
  // Geometric tail: sum of the remaining halvings.
  CHECK(r.extrapolated_tail == Catch::Approx(r.pair_distances.back()).epsilon(1e-6));
}

TEST_CASE("log phase fit needs four horizons") {
  auto g = make_grid(64, 32.0);
  auto psi = gaussian_packet(g, {0, 1, 2});
  const std::vector<double> sched{1, 2, 4};
  std::vector<State> approx(3, psi);
  CHECK_THROWS(log_phase_fit(assemble_report(sched, approx, 1.0)));
}

TEST_CASE("S matrix on a packet agrees with the dense propagator") {
  auto g = make_grid(64, 32.0);
  auto psi = gaussian_packet(g, {-2, 1, 2});
  oracle::DenseEvolution dense(g, coulomb());
  for (bool dollard_ref : {false, true}) {
    auto split = s_matrix_on_packet(psi, 2.0, coulomb(), {}, stepper(0.002, false),
                                    dollard_ref ? ReferenceKind::dollard : ReferenceKind::free);
    auto brute = oracle::dense_s_matrix(dense, psi, 2.0, 0.5, dollard_ref);
    CHECK(distance(split, brute) < 1e-5);
  }
}
