#pragma once

#include <cmath>

namespace driftlab {

// C-infinity step: 0 for t <= 0, 1 for t >= 1, built from e^{-1/t}.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// 1 on [0, rho/2], 0 beyond rho.
inline double smooth_window(double r, double rho) { return smooth_step(2.0 * (1.0 - r / rho)); }

}  // namespace driftlab
