#pragma once

namespace dollard {

//! Exponential integral E_1(x) = int_x^inf e^{-s}/s ds for x > 0.
//! Power series for x <= 1, Lentz continued fraction beyond.
double exponential_integral_e1(double x);

//! Switching integral L(eps, t) = sign(t) int_1^{|t|} e^{-eps s}/s ds,
//! zero for |t| <= 1. t = +-infinity gives +-E_1(eps) (eps > 0 required).
//! Finite t uses adaptive Gauss-Kronrod quadrature.
double switching_integral(double epsilon, double t);

} // namespace dollard
