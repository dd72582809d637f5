#include "dollard/dynamics.hpp"
#include "dollard/errors.hpp"
#include "dollard/oracle.hpp"
#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

using namespace dollard;
using Catch::Approx;

namespace {

PotentialSpec coulomb(double alpha = 0.5) {
  return {PotentialKind::coulomb_reg, alpha, 1.0, 0.5};
}

StepperConfig tiny_stepper(double dt) {
  StepperConfig c;
  c.dt = dt;
  c.monitor_support = false;
  return c;
}

} // namespace

TEST_CASE("potential shapes") {
  auto v = coulomb();
  CHECK(std::abs(v(100.0) * 100.0 - 0.5) < 1e-4 * 0.5);
  CHECK(v(0.0) == v.max_value());
  PotentialSpec sr{PotentialKind::short_range_control, 0.5, 1.0, 0.5};
  // Integral of |V| (1 + |x|) converges: the truncation at 80 and 160 agree.
  auto integral = [&](double R) {
    double s = 0.0;
    const double h = 1e-3;
    const int N = static_cast<int>(std::lround(2 * R / h));
    for (int i = 0; i <= N; ++i) {
      const double x = -R + i * h;
      s += (i == 0 || i == N ? 0.5 : 1.0) * std::abs(sr(x)) * (1 + std::abs(x));
    }
    return s * h;
  };
  CHECK(std::isfinite(integral(80.0)));
  CHECK(std::abs(integral(160.0) - integral(80.0)) < 1e-12);

  for (double x : {-3.0, -0.4, 0.7, 5.0}) {
    const double h = 1e-5;
    CHECK(v.derivative(x) == Approx((v(x + h) - v(x - h)) / (2 * h)).epsilon(1e-7));
    CHECK(sr.derivative(x) == Approx((sr(x + h) - sr(x - h)) / (2 * h)).epsilon(1e-7));
  }
  CHECK_THROWS_AS((PotentialSpec{PotentialKind::coulomb_reg, 0.5, 0.0, 0.5}.validate()),
                  ConfigError);
}

TEST_CASE("free propagation") {
  auto g = make_grid(4096, 2048.0);
  auto psi = gaussian_packet(g, {0.0, 1.0, 2.0});
  CHECK(distance(free_propagate(psi, 0.0), psi) == 0.0);

  auto a = free_propagate(free_propagate(psi, 3.7), -1.2);
  auto b = free_propagate(psi, 2.5);
  CHECK(distance(a, b) < 1e-13);

  auto s = free_propagate(psi, 10.0);
  const double x = expect(s, Observable::position);
  const double w2 = expect(s, Observable::position_squared) - x * x;
  CHECK(std::abs(x - 10.0) < 1e-6);
  CHECK(std::abs(w2 - 10.25) < 1e-6);
  CHECK(std::abs(s.norm() - 1.0) < 1e-13);
}

TEST_CASE("dollard phase closed form") {
  auto big = make_grid(1024, 512.0 * std::numbers::pi);
  const std::size_t idx = 1024 / 2 - 1; // any positive lattice momentum
  const double k = big->k(idx);
  const auto ph = dollard_phase(*big, 100.0, 0.5);
  CHECK(ph[idx] == Approx(-(0.5 / k) * std::log(k * 100.0 + 1.0)).epsilon(1e-14));
  CHECK(ph[0] == 0.0);

  // k = 2 exactly: dk = 2 pi / L with L = pi -> k_1 = 2.
  auto g2 = make_grid(8, std::numbers::pi);
  REQUIRE(g2->k(1) == Approx(2.0).epsilon(1e-15));
  const double phi = dollard_phase(*g2, 100.0, 0.5)[1];
  CHECK(phi == Approx(-0.25 * std::log(201.0)).epsilon(1e-14));
  CHECK(phi == Approx(-1.3258262).margin(1e-7));
  // Quadrature of int_0^t alpha m / (|k| s + m) ds reproduces -Phi.
  double q = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double s = (i + 0.5) * 100.0 / N;
    q += 0.5 / (2.0 * s + 1.0);
  }
  q *= 100.0 / N;
  CHECK(-phi == Approx(q).epsilon(1e-8));
  CHECK(dollard_phase(*g2, -100.0, 0.5)[1] == Approx(-phi).epsilon(1e-15));

  for (double p : dollard_phase(*big, 0.0, 0.5))
    CHECK(p == 0.0);
  for (double p : dollard_phase(*big, 37.0, 0.0))
    CHECK(p == 0.0);
}

TEST_CASE("dollard propagation") {
  auto g = make_grid(4096, 2048.0);
  auto psi = gaussian_packet(g, {0.0, 2.0, 10.0});
  CHECK(distance(dollard_propagate(psi, 12.0, 0.0), free_propagate(psi, 12.0)) == 0.0);
  for (double t : {1.0, -1.0, 10.0, -10.0, 1000.0, -1000.0})
    CHECK(std::abs(dollard_propagate(psi, t, 0.5).norm() - psi.norm()) < 1e-13);

  // Increment phase at k = 2, alpha = 0.5, s = 1, t = 1000.
  const double dphi = -0.25 * (std::log(2.0 * 1001 + 1) - std::log(2.0 * 1000 + 1));
  CHECK(std::abs(dphi) == Approx(2.5e-4).epsilon(0.01));

  // Flow property U_D(t, s) U_D(s, tau) = U_D(t, tau) with U_D(t, s) = U_D(t) U_D(s)^{-1}.
  auto flow = [&](const State &x, double t, double s) {
    auto phase = dollard_phase(*g, s, 0.5);
    for (auto &v : phase)
      v = -v;
    return dollard_propagate(free_propagate(apply_momentum_phase(x, phase), -s), t, 0.5);
  };
  auto lhs = flow(flow(psi, 40.0, 500.0), 3.0, 40.0);
  auto rhs = flow(psi, 3.0, 500.0);
  CHECK(distance(lhs, rhs) < 1e-12);
}

TEST_CASE("dollard generator vanishes asymptotically on the probe domain") {
  auto g = make_grid(4096, 2048.0);
  const double p_min = 0.5, alpha = 0.5;
  double prev = 1e300;
  for (double t : {10.0, 100.0, 1000.0, 10000.0}) {
    double sup = 0.0;
    for (double k : g->momenta())
      if (std::abs(k) >= p_min)
        sup = std::max(sup, alpha / (std::abs(k) * t + 1.0));
    CHECK(sup < prev);
    CHECK(sup <= alpha / (p_min * t));
    prev = sup;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("adiabatic dollard reference") {
  auto g = make_grid(4096, 2048.0);
  auto psi = gaussian_packet(g, {0.0, 2.0, 10.0});
  SwitchingSpec sw{0.01, 0.0};
  CHECK(distance(adiabatic_dollard_propagate(psi, 0.8, 0.5, sw), free_propagate(psi, 0.8)) == 0.0);
  CHECK(distance(adiabatic_dollard_propagate(psi, -1.0, 0.5, sw), free_propagate(psi, -1.0)) == 0.0);

  const auto sharp = adiabatic_dollard_phase(*g, 50.0, 0.5, SwitchingSpec{}.epsilon);
  const auto smooth = dollard_phase(*g, 50.0, 0.5);
  for (std::size_t m = 1; m < g->size(); ++m) {
    const double k = std::abs(g->k(m));
    CHECK(sharp[m] == Approx(-0.5 / k * std::log(50.0)).epsilon(1e-12));
    // The two regularisations differ by a t-independent phase for |k| t >> 1.
    if (k > 1.0)
      CHECK(std::abs((smooth[m] - sharp[m]) + 0.5 / k * std::log(k)) < 0.5 / (k * k * 50.0) + 1e-12);
  }
  CHECK(std::abs(adiabatic_dollard_propagate(psi, 300.0, 0.5, sw).norm() - 1.0) < 1e-13);
}

TEST_CASE("split step with zero coupling is the free evolution") {
  auto g = make_grid(2048, 1024.0);
  auto psi = gaussian_packet(g, {-100.0, 1.0, 8.0});
  StepperConfig cfg;
  cfg.dt = 0.01;
  auto a = full_propagate(psi, 0.0, 100.0, coulomb(0.0), {}, cfg);
  CHECK(distance(a, free_propagate(psi, 100.0)) < 1e-10);
}

TEST_CASE("split step is reversible and unitary") {
  auto g = make_grid(2048, 1024.0);
  auto psi = gaussian_packet(g, {-30.0, 2.0, 8.0});
  StepperConfig cfg;
  cfg.dt = 0.02;
  PropagationStats st;
  auto fwd = full_propagate(psi, 0.0, 50.0, coulomb(), {}, cfg, &st);
  auto back = full_propagate(fwd, 50.0, 0.0, coulomb(), {}, cfg, &st);
  CHECK(distance(back, psi) < 1e-9);
  CHECK(st.steps == 5000);
  CHECK(st.max_norm_drift < 1e-12);

  SwitchingSpec sw{0.05, 2.0};
  auto f2 = full_propagate(psi, -20.0, 30.0, coulomb(), sw, cfg);
  auto b2 = full_propagate(f2, 30.0, -20.0, coulomb(), sw, cfg);
  CHECK(distance(b2, psi) < 1e-9);
}

TEST_CASE("split step against the dense eigendecomposition oracle") {
  auto g = make_grid(64, 32.0);
  auto psi = gaussian_packet(g, {0.0, 1.0, 2.0});
  const auto pot = coulomb();
  oracle::DenseEvolution dense(g, pot);

  auto split = full_propagate(psi, 0.0, 0.2, pot, {}, tiny_stepper(0.001));
  CHECK(distance(split, dense.evolve(psi, 0.2)) < 1e-6);

  // Second order: halving dt divides the error by four.
  const double t = 4.0;
  auto exact = dense.evolve(psi, t);
  const double e1 = distance(full_propagate(psi, 0.0, t, pot, {}, tiny_stepper(0.02)), exact);
  const double e2 = distance(full_propagate(psi, 0.0, t, pot, {}, tiny_stepper(0.01)), exact);
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.2));
}

TEST_CASE("group law of the split step holds to order dt squared") {
  auto g = make_grid(64, 32.0);
  auto psi = gaussian_packet(g, {0.0, 1.0, 2.0});
  const auto pot = coulomb();
  auto residual = [&](double dt) {
    const auto cfg = tiny_stepper(dt);
    auto whole = full_propagate(psi, 0.0, 1.37 + 2.11, pot, {}, cfg);
    auto parts = full_propagate(full_propagate(psi, 0.0, 1.37, pot, {}, cfg), 1.37,
                                1.37 + 2.11, pot, {}, cfg);
    return distance(whole, parts);
  };
  const double r1 = residual(0.02), r2 = residual(0.01);
  CHECK(r1 < 1e-3);
  CHECK(r2 < r1 / 3.0);
}

TEST_CASE("stability and support guards") {
  auto g = make_grid(4096, 2048.0); // E_max = 2 pi^2
  StepperConfig cfg;
  cfg.dt = 0.03;
  try {
    check_stability(*g, cfg);
    FAIL("guard should trip");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("dt * E_max < 0.5") != std::string::npos);
  }
  cfg.dt = 0.02;
  CHECK_NOTHROW(check_stability(*g, cfg));

  auto small = make_grid(512, 256.0);
  auto psi = gaussian_packet(small, {60.0, 2.0, 5.0});
  StepperConfig c2;
  c2.dt = 0.02;
  try {
    full_propagate(psi, 0.0, 100.0, coulomb(), {}, c2);
    FAIL("packet should leave the window");
  } catch (const SupportViolation &e) {
    CHECK(e.time() > 10.0);
    CHECK(e.time() < 100.0);
  }
}
