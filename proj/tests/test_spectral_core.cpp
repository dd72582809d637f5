#include "dollard/errors.hpp"
#include "dollard/spectral_core.hpp"
#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

using namespace dollard;
using Catch::Approx;

TEST_CASE("grid spacing and dual lattice") {
  auto g = make_grid(8, 8.0);
  CHECK(g->dx() == Approx(1.0));
  CHECK(g->dk() == Approx(0.7853981634).epsilon(1e-10));
  CHECK(g->dx() * g->dk() * 8 == Approx(2 * std::numbers::pi).epsilon(1e-15));

  auto big = make_grid(4096, 2048.0);
  CHECK(big->dx() == 0.5);
  CHECK(big->k_max() == Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(big->x(0) == -1024.0);

  // Every nonzero momentum except Nyquist has its mirror image on the lattice.
  for (std::size_t m = 1; m < 4096; ++m) {
    if (m == 2048)
      continue;
    CHECK(big->k(m) == -big->k(4096 - m));
  }
  CHECK(big->k(2048) == Approx(big->k_max()).epsilon(1e-15));
}

TEST_CASE("grid preconditions") {
  CHECK_THROWS_AS(make_grid(7, 8.0), ConfigError);
  CHECK_THROWS_AS(make_grid(4, 8.0), ConfigError);
  CHECK_THROWS_AS(make_grid(64, 0.0), ConfigError);
  CHECK_THROWS_AS(make_grid(64, 8.0, -1.0), ConfigError);
}

TEST_CASE("gaussian packet moments") {
  auto g = make_grid(4096, 2048.0);
  auto s = gaussian_packet(g, {0.0, 0.0, 1.0});
  CHECK(s.norm() == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(expect(s, Observable::position)) < 1e-10);
  CHECK(std::abs(expect(s, Observable::momentum)) < 1e-10);
  CHECK(std::abs(expect(s, Observable::position_squared) - 1.0) < 1e-10);

  auto moving = gaussian_packet(g, {-200.0, 2.0, 10.0});
  CHECK(std::abs(expect(moving, Observable::momentum) - 2.0) < 1e-10);

  auto p2 = gaussian_packet(g, {0.0, 2.0, 5.0});
  const double exact = 4.0 + 1.0 / (4.0 * 25.0);
  CHECK(std::abs(expect(p2, Observable::momentum_squared) - exact) < 1e-8);
  CHECK(std::abs(expect(p2, Observable::kinetic) - exact / 2) < 1e-8);
}

TEST_CASE("packet support violations report the margin") {
  auto g = make_grid(256, 64.0);
  try {
    gaussian_packet(g, {20.0, 1.0, 3.0});
    FAIL("expected a support violation");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("short by 6") != std::string::npos);
  }
  CHECK_THROWS_AS(gaussian_packet(g, {0.0, 12.0, 3.0}), ConfigError);
  CHECK_THROWS_AS(require_momentum_clearance({0, 0.1, 5}, 0.5), ConfigError);
  CHECK_NOTHROW(require_momentum_clearance({0, -1.0, 5}, 0.5));
}

TEST_CASE("inverse momentum against quadrature of the analytic density") {
  auto g = make_grid(4096, 2048.0);
  const double p0 = 4.0, sigma = 4.0;
  auto s = gaussian_packet(g, {0.0, p0, sigma});
  // |phi(k)|^2 is a normal density with mean p0 and sd 1/(2 sigma).
  const double sp = 1.0 / (2.0 * sigma);
  double q = 0.0;
  const int N = 200000;
  const double lo = p0 - 12 * sp, hi = p0 + 12 * sp, h = (hi - lo) / N;
  for (int i = 0; i <= N; ++i) {
    const double k = lo + i * h;
    const double w = (i == 0 || i == N) ? 0.5 : 1.0;
    q += w * std::exp(-0.5 * std::pow((k - p0) / sp, 2)) / (sp * std::sqrt(2 * std::numbers::pi)) / k;
  }
  q *= h;
  const double v = expect(s, Observable::momentum_inverse_abs);
  CHECK(std::abs(v - 0.25) < 0.02 * 0.25);
  CHECK(std::abs(v - q) < 1e-10);

  auto still = gaussian_packet(g, {0.0, 0.0, 4.0});
  CHECK_THROWS_AS(expect(still, Observable::momentum_inverse_abs), PreconditionError);
}

TEST_CASE("real wavefunctions carry no current") {
  auto g = make_grid(512, 128.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  CVector a(512);
  for (std::size_t j = 0; j < 512; ++j)
    a[j] = nd(rng) * std::exp(-std::pow(g->x(j) / 10.0, 2));
  const double nrm = State(g, Representation::position, a).norm();
  for (auto &c : a)
    c /= nrm;
  CHECK(std::abs(expect(State(g, Representation::position, a), Observable::momentum)) < 1e-10);
}

TEST_CASE("distance and overlap") {
  auto g = make_grid(1024, 512.0);
  auto psi = gaussian_packet(g, {0.0, 1.0, 5.0});
  CHECK(distance(psi, psi) == 0.0);
  CHECK(std::abs(overlap(psi, psi) - cplx(1.0)) < 1e-12);

  const double th = std::numbers::pi / 3;
  auto rot = rotate_phase(psi, th);
  CHECK(distance(psi, rot) == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(overlap(psi, rot) - std::polar(1.0, th)) < 1e-12);
  // Representation is converted automatically.
  CHECK(std::abs(overlap(psi, rot.to_momentum()) - std::polar(1.0, th)) < 1e-12);

  auto far = gaussian_packet(g, {100.0, 1.0, 5.0});
  const double analytic = std::exp(-100.0 * 100.0 / (8.0 * 25.0));
  CHECK(std::abs(overlap(psi, far)) < 1e-10);
  CHECK(std::abs(std::abs(overlap(psi, far)) - analytic) < 1e-12);

  auto other = make_grid(512, 512.0);
  CHECK_THROWS(distance(psi, gaussian_packet(other, {0.0, 1.0, 5.0})));
}

TEST_CASE("parseval and round trip on random states") {
  std::mt19937_64 rng(20240917);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {8u, 64u, 1024u, 1u << 14}) {
    auto g = make_grid(n, 0.37 * static_cast<double>(n));
    CVector a(n);
    for (auto &c : a)
      c = {u(rng), u(rng)};
    State s(g, Representation::position, a);
    auto k = s.to_momentum();
    CHECK(std::abs(k.norm() - s.norm()) < 1e-12 * s.norm());
    auto back = k.to_position();
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      err = std::max(err, std::abs(back.amplitudes()[j] - a[j]));
    CHECK(err < 10 * std::numeric_limits<double>::epsilon() * static_cast<double>(n));
  }
}

TEST_CASE("momentum transform matches the continuum Gaussian") {
  auto g = make_grid(2048, 400.0);
  const double x0 = 3.0, p0 = 1.5, sigma = 4.0;
  auto k = gaussian_packet(g, {x0, p0, sigma}).to_momentum();
  // phi(k) = (2 sigma^2/pi)^{1/4} e^{-(k-p0)^2 sigma^2} e^{-i (k - p0) x0}
  const double amp = std::pow(2.0 * sigma * sigma / std::numbers::pi, 0.25);
  double err = 0.0;
  for (std::size_t m = 0; m < g->size(); ++m) {
    const double kk = g->k(m);
    const cplx exact = amp * std::exp(-std::pow((kk - p0) * sigma, 2)) *
                       std::polar(1.0, -(kk - p0) * x0);
    err = std::max(err, std::abs(k.amplitudes()[m] - exact));
  }
  CHECK(err < 1e-12);
}
