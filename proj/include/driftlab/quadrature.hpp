#pragma once

// Thin wrappers over Boost.Math quadrature with the tolerances used throughout.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>

namespace driftlab::quad {

// Adaptive Gauss-Kronrod (7/15) on a finite interval. The interval is mapped to [0, 1]
// first: Boost compares an unscaled error estimate against a scaled tolerance, which
// never terminates early on very short intervals.
template <typename F>
double gk(F&& f, double a, double b, double rel_tol = 1e-11, unsigned max_depth = 15) {
  if (!(b > a)) return 0.0;
  const double w = b - a;
  auto g = [&](double u) { return w * f(a + w * u); };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, 0.0, 1.0, max_depth, rel_tol);
}

// Double-exponential rule; tolerant of integrable endpoint singularities.
template <typename F>
double tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-10) {
  if (!(b > a)) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> rule(12);
  return rule.integrate(f, a, b, rel_tol);
}

// int_0^b f for f ~ C r^q near 0 (q > -1), split at the geometric cuts b 8^{-k}. The
// first 1e-6 b is done in closed form from the power fitted at its end, which keeps
// the quadrature away from values that overflow in strongly singular kernels.
template <typename F>
double origin_singular(F&& f, double b, double rel_tol = 1e-10) {
  if (!(b > 0.0)) return 0.0;
  const double r0 = 1e-6 * b;
  const double f0 = f(r0), f1 = f(0.25 * r0);
  double sum = 0.0;
  if (f0 != 0.0 && f1 != 0.0 && f0 / f1 > 0.0) {
    const double q = std::log(f0 / f1) / std::log(4.0);
    if (q <= -1.0) return std::numeric_limits<double>::infinity();
    sum = f0 * r0 / (q + 1.0);
  }
  const double cuts[] = {r0, b / 4096, b / 512, b / 64, b / 8, b / 2, b};
  for (int k = 0; k + 1 < 7; ++k) sum += tanh_sinh(f, cuts[k], cuts[k + 1], rel_tol);
  return sum;
}

// Fixed composite Gauss-Legendre, n panels of 20 points.
template <typename F>
double gl_composite(F&& f, double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) sum += Rule::integrate(f, a + k * h, a + (k + 1) * h);
  return sum;
}

}  // namespace driftlab::quad
