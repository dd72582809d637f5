#pragma once
#include <cstddef>
#include <span>
#include <vector>

namespace dollard {

//! Ordinary least squares y ~ slope x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;     // root-mean-square residual
  double slope_stderr = 0.0; // standard error of the slope (0 if n <= 2)
  std::size_t points = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

//! Least squares y ~ sum_c coef_c * columns[c] (Householder QR).
struct LinearFit {
  std::vector<double> coefficients;
  std::vector<double> stderrs;
  double residual = 0.0; // root-mean-square residual
};

LinearFit fit_linear(const std::vector<std::vector<double>> &columns,
                     std::span<const double> y);

//! Principal value in (-pi, pi].
double wrap_phase(double theta);

} // namespace dollard
