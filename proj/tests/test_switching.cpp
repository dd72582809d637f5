#include "dollard/switching.hpp"
#include <boost/math/special_functions/expint.hpp>
#include <catch_amalgamated.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace dollard;
using Catch::Approx;

namespace {

// -gamma - ln x + sum (-1)^{k+1} x^k / (k k!), summed to convergence.
double e1_series(double x) {
  double sum = 0.0, term = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= x / k;
    const double add = (k % 2 ? 1.0 : -1.0) * term / k;
    sum += add;
    if (std::abs(add) < 1e-18)
      break;
  }
  return -std::numbers::egamma - std::log(x) + sum;
}

// Composite Simpson in u = ln s.
double quad_L(double eps, double t) {
  const double U = std::log(std::abs(t));
  const int N = 20000;
  const double h = U / N;
  double s = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(-eps * std::exp(i * h));
  }
  return (t > 0 ? 1.0 : -1.0) * s * h / 3.0;
}

constexpr double inf = std::numeric_limits<double>::infinity();

} // namespace

TEST_CASE("exponential integral") {
  CHECK(exponential_integral_e1(0.01) == Approx(4.037929576538114).epsilon(1e-12));
  for (double x : {1e-6, 1e-3, 0.08, 0.5, 1.0, 1.5, 3.0, 10.0, 40.0}) {
    const double ref = boost::math::expint(1, x);
    CHECK(exponential_integral_e1(x) == Approx(ref).epsilon(1e-10));
    if (x <= 1.0)
      CHECK(exponential_integral_e1(x) == Approx(e1_series(x)).epsilon(1e-12));
  }
  for (double e : {0.09, 0.05, 0.01, 1e-4})
    CHECK(std::abs(exponential_integral_e1(e) + std::numbers::egamma + std::log(e)) < e);
}

TEST_CASE("switching integral values") {
  CHECK(switching_integral(0.3, 1.0) == 0.0);
  CHECK(switching_integral(0.3, -0.5) == 0.0);
  CHECK(switching_integral(0.0, std::exp(2.0)) == Approx(2.0).epsilon(1e-14));
  CHECK(switching_integral(0.0, -std::exp(2.0)) == Approx(-2.0).epsilon(1e-14));
  CHECK(switching_integral(0.01, inf) == Approx(4.037929576538114).epsilon(1e-10));
  CHECK(switching_integral(0.01, -inf) == Approx(-4.037929576538114).epsilon(1e-10));
  for (double eps : {0.001, 0.01, 0.08, 0.7})
    for (double t : {1.5, 20.0, 700.0, 5000.0})
      CHECK(switching_integral(eps, t) == Approx(quad_L(eps, t)).epsilon(1e-10));
  // Far beyond 1/eps the finite-t value reaches the limit.
  CHECK(switching_integral(0.04, 3000.0) == Approx(exponential_integral_e1(0.04)).epsilon(1e-12));
}

TEST_CASE("switching integral antisymmetry and monotonicity, randomised") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> le(std::log(1e-4), std::log(2.0));
  std::uniform_real_distribution<double> lt(0.0, std::log(1e5));
  for (int i = 0; i < 300; ++i) {
    const double eps = std::exp(le(rng));
    const double t1 = std::exp(lt(rng)), t2 = std::exp(lt(rng));
    const double a = switching_integral(eps, t1), b = switching_integral(eps, t2);
    CHECK(switching_integral(eps, -t1) == -a);
    CHECK(a >= 0.0);
    CHECK(a <= switching_integral(eps, inf) * (1 + 1e-12));
    if (t1 < t2)
      CHECK(a <= b * (1 + 1e-13));
    else
      CHECK(b <= a * (1 + 1e-13));
  }
}
