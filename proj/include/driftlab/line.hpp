#pragma once

// The abelian baseline: the real line with Lebesgue measure and the field d/dx.
// Every object here has a closed form or a Fourier-side description, which is what
// makes it useful for cross-checking the ax+b machinery.

#include "driftlab/radial.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace driftlab::line {

struct LineGrid {
  double x_min = -1.0, x_max = 1.0;
  int n = 8;

  LineGrid() = default;
  LineGrid(double x_min, double x_max, int n);

  double h() const { return (x_max - x_min) / (n - 1); }
  double x(int i) const { return x_min + i * h(); }
  LineGrid refined() const { return {x_min, x_max, 2 * n - 1}; }
  bool operator==(const LineGrid& o) const { return x_min == o.x_min && x_max == o.x_max && n == o.n; }
};

template <typename Scalar>
struct LineFunction {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  LineGrid grid;
  Array values;

  LineFunction() = default;
  explicit LineFunction(const LineGrid& g) : grid(g), values(Array::Zero(g.n)) {}
  LineFunction(const LineGrid& g, Array v) : grid(g), values(std::move(v)) {}
};

using LineField = LineFunction<double>;
using CLineField = LineFunction<std::complex<double>>;

LineField sample(const std::function<double(double)>& rule, const LineGrid& g);
Eigen::ArrayXd trapezoid_weights(const LineGrid& g);

template <typename Scalar>
Scalar integrate(const LineFunction<Scalar>& f);
template <typename Scalar>
double lp_norm(const LineFunction<Scalar>& f, double p);

// central differences, one-sided second-order stencils at the ends
template <typename Scalar>
LineFunction<Scalar> derivative(const LineFunction<Scalar>& f, int order = 1);

// (-d^2/dx^2 + shift) with zero Dirichlet data outside the grid
template <typename Scalar>
LineFunction<Scalar> generator_apply(const LineFunction<Scalar>& f, double shift = 0.0);

// (4 pi t)^{-1/2} e^{-x^2 / 4t}
double gauss_kernel(double t, double x);

// Heat kernel of the line served from the same tabulation used on ax+b.
class LineHeatModel {
 public:
  explicit LineHeatModel(double r_max = 12.0) : r_max_(r_max) {}
  std::shared_ptr<const RadialProfile> table(double t) const;
  double p_t(double t, double x) const { return (*table(t))(std::abs(x)); }

 private:
  double r_max_;
};

// Convolution with an even kernel k(|x|) on the grid: FFT Toeplitz product plus the
// same windowed near-field self term used on ax+b.
class LineKernelOperator {
 public:
  LineKernelOperator(std::function<double(double)> k, const LineGrid& g, double mass = std::nan(""),
                     double window_factor = 16.0);

  template <typename Scalar>
  LineFunction<Scalar> apply(const LineFunction<Scalar>& f) const;
  LineField apply_direct(const LineField& f) const;
  double self_weight() const { return D_; }
  double truncation_mass(const LineField& f) const;

 private:
  std::function<double(double)> k_;
  LineGrid grid_;
  double mass_;
  double D_ = 0.0;
  int L_ = 0;
  std::vector<std::complex<double>> khat_;
};

LineField heat_apply(const LineField& f, double t);
CLineField heat_apply(const CLineField& f, double t);

// Multiply the Fourier transform by symbol(xi) on a zero-padded periodic extension.
template <typename Scalar>
LineFunction<Scalar> fourier_multiplier(const LineFunction<Scalar>& f, const std::function<double(double)>& symbol,
                                        int pad = 4);

}  // namespace driftlab::line
