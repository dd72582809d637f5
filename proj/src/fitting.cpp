#include "dollard/fitting.hpp"
#include "dollard/errors.hpp"
#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace dollard {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  auto lin = fit_linear({std::vector<double>(x.begin(), x.end()),
                         std::vector<double>(x.size(), 1.0)},
                        y);
  LineFit f;
  f.slope = lin.coefficients[0];
  f.intercept = lin.coefficients[1];
  f.residual = lin.residual;
  f.slope_stderr = lin.stderrs[0];
  f.points = x.size();
  return f;
}

LinearFit fit_linear(const std::vector<std::vector<double>> &columns,
                     std::span<const double> y) {
  const auto p = columns.size();
  const auto n = y.size();
  if (p == 0 || n < p)
    throw PreconditionError("least squares: fewer points than parameters");
  Eigen::MatrixXd A(n, p);
  Eigen::VectorXd b(n);
  for (std::size_t c = 0; c < p; ++c) {
    if (columns[c].size() != n)
      throw PreconditionError("least squares: column length mismatch");
    for (std::size_t i = 0; i < n; ++i)
      A(i, c) = columns[c][i];
  }
  for (std::size_t i = 0; i < n; ++i)
    b(i) = y[i];
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::VectorXd coef = qr.solve(b);
  const Eigen::VectorXd r = A * coef - b;

  LinearFit out;
  out.coefficients.assign(coef.data(), coef.data() + p);
  out.residual = std::sqrt(r.squaredNorm() / double(n));
  out.stderrs.assign(p, 0.0);
  if (n > p) {
    const double s2 = r.squaredNorm() / double(n - p);
    const Eigen::MatrixXd cov = (A.transpose() * A).inverse() * s2;
    for (std::size_t c = 0; c < p; ++c)
      out.stderrs[c] = std::sqrt(std::max(0.0, cov(c, c)));
  }
  return out;
}

double wrap_phase(double theta) {
  constexpr double pi = std::numbers::pi;
  double w = std::remainder(theta, 2.0 * pi);
  if (w <= -pi)
    w += 2.0 * pi;
  return w;
}

} // namespace dollard
