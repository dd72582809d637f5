#include "dollard/switching.hpp"
#include "dollard/errors.hpp"
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace dollard {

double exponential_integral_e1(double x) {
  if (!(x > 0.0))
    throw PreconditionError("E1(x) requires x > 0");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (x <= 1.0) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double term = 1.0; // (-x)^k / k!
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
      term *= -x / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < eps * std::abs(sum))
        break;
    }
    return -std::numbers::egamma - std::log(x) - sum;
  }
  // Continued fraction E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double a = -double(i) * double(i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps)
      break;
  }
  return h * std::exp(-x);
}

double switching_integral(double epsilon, double t) {
  if (epsilon < 0.0)
    throw PreconditionError("switching integral requires epsilon >= 0");
  if (std::isinf(t)) {
    if (!(epsilon > 0.0))
      throw PreconditionError("L(0, +-inf) diverges");
    const double v = exponential_integral_e1(epsilon);
    return t > 0 ? v : -v;
  }
  const double a = std::abs(t);
  if (a <= 1.0)
    return 0.0;
  const double sign = t > 0 ? 1.0 : -1.0;
  if (epsilon == 0.0)
    return sign * std::log(a);
  // Integrate in u = ln s so the 1/s singularity structure is flat:
  // int_0^{ln|t|} e^{-eps e^u} du.
  auto f = [epsilon](double u) { return std::exp(-epsilon * std::exp(u)); };
  const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, 0.0, std::log(a), 15, 1e-13);
  return sign * val;
}

} // namespace dollard
