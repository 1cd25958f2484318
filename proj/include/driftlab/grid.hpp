#pragma once

// Scalar fields sampled on a rectangle of chart coordinates, with quadrature against
// rho, lambda, mu(gamma), finite-difference frame fields and group convolution.
//
// Two charts share the code:
//   Affine: node (i, j) -> (x_i, e^{s_j});  drho = dx ds.
//   Wedge:  node (i, j) -> (t_i e^{s_j}, e^{s_j}) with t = x / a;  drho = e^s dt ds.
// The wedge chart turns the thin sets {0 < x < a, a -> 0} into rectangles; there
// X0 = d/ds - t d/dt and X1 = d/dt.

#include "driftlab/group.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace driftlab {

enum class Chart { Affine, Wedge };

struct GridSpec {
  double x_min = -1, x_max = 1, s_min = -1, s_max = 1;
  int n_x = 8, n_s = 8;
  Chart chart = Chart::Affine;

  GridSpec() = default;
  GridSpec(double x_min, double x_max, double s_min, double s_max, int n_x, int n_s,
           Chart chart = Chart::Affine);

  double hx() const { return (x_max - x_min) / (n_x - 1); }
  double hs() const { return (s_max - s_min) / (n_s - 1); }
  double xc(int i) const { return x_min + i * hx(); }  // first chart coordinate (x or t)
  double s(int j) const { return s_min + j * hs(); }
  int size() const { return n_x * n_s; }

  GroupPoint point(int i, int j) const;
  // chart coordinates of a group point
  void chart_coords(const GroupPoint& p, double& c1, double& s_out) const;
  // Jacobian of drho against d(c1) ds at row j
  double rho_jacobian(int j) const;

  // same rectangle, spacings divided by two
  GridSpec refined() const;

  bool operator==(const GridSpec& o) const;
  std::string to_json() const;
  static GridSpec from_json(const std::string& text);
};

template <typename Scalar>
struct GridFunction {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  GridSpec spec;
  Array values;  // (n_x, n_s)

  GridFunction() = default;
  explicit GridFunction(const GridSpec& g) : spec(g), values(Array::Zero(g.n_x, g.n_s)) {}
  GridFunction(const GridSpec& g, Array v) : spec(g), values(std::move(v)) {}

  Scalar operator()(int i, int j) const { return values(i, j); }
  bool finite() const { return values.allFinite(); }
};

using Field = GridFunction<double>;
using CField = GridFunction<std::complex<double>>;

// Trapezoid weights times the measure density, so that integrate(f) = sum(w * f).
Eigen::ArrayXXd quadrature_weights(const GridSpec& g, const MeasureTag& m);

Field sample(const std::function<double(const GroupPoint&)>& rule, const GridSpec& g);
CField sample_complex(const std::function<std::complex<double>(const GroupPoint&)>& rule, const GridSpec& g);

template <typename Scalar>
Scalar integrate(const GridFunction<Scalar>& f, const MeasureTag& m);

template <typename Scalar>
double lp_norm(const GridFunction<Scalar>& f, double p, const MeasureTag& m);

enum class FrameField { X0, X1 };
using Word = std::vector<FrameField>;

template <typename Scalar>
GridFunction<Scalar> apply_field(const GridFunction<Scalar>& f, FrameField which);

// X_J f = X_{j1}(X_{j2}(... X_{jm} f)), |J| <= 3
template <typename Scalar>
GridFunction<Scalar> apply_word(const GridFunction<Scalar>& f, const Word& word);

// All words of length <= k.
std::vector<Word> words_up_to(int k);
std::string word_name(const Word& w);

// Drifted sub-Laplacian Delta_chi = -(X0^2 + X1^2) + gamma X0 in divergence form
// -e^{gamma s} d_s(e^{-gamma s} d_s) - e^{2s} d_x^2, zero Dirichlet data outside the grid.
// Symmetric for the discrete mu(gamma) inner product. Affine chart only.
template <typename Scalar>
GridFunction<Scalar> generator_apply(const GridFunction<Scalar>& f, double gamma, double shift = 0.0);

// Bilinear interpolation in chart coordinates; zero outside the rectangle.
template <typename Scalar>
Scalar interpolate(const GridFunction<Scalar>& f, const GroupPoint& p);

struct ResampleDiagnostics {
  double truncation_mass = 0.0;  // fraction of |f| rho-mass mapped outside the rectangle
};

// (L_y f)(x) = f(y^{-1} x), resampled on the same grid.
Field left_translate(const Field& f, const GroupPoint& y, ResampleDiagnostics* diag = nullptr);
// g_check(x) = g(x^{-1})
Field reflect(const Field& g, ResampleDiagnostics* diag = nullptr);

struct ConvolutionResult {
  Field field;
  double truncation_mass = 0.0;
  bool boundary_decay_ok = true;
  std::vector<std::string> warnings;
};

// f * g (x) = int f(x y^{-1}) g(y) drho(y), direct O(N^2) sum with bilinear f.
ConvolutionResult convolve(const Field& f, const Field& g);

// Serialization: values in row-major order over x then s, plus a JSON sidecar.
template <typename Scalar>
void write_binary(const GridFunction<Scalar>& f, const std::string& path);
template <typename Scalar>
GridFunction<Scalar> read_binary(const std::string& path);
void write_csv(const Field& f, const std::string& path);
Field read_csv(const std::string& path);

// Max |f| over boundary nodes relative to max |f|.
template <typename Scalar>
double boundary_ratio(const GridFunction<Scalar>& f);

// Elementwise helpers kept in the expression style of Eigen.
template <typename Scalar>
GridFunction<Scalar> operator+(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  return {a.spec, a.values + b.values};
}
template <typename Scalar>
GridFunction<Scalar> operator-(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  return {a.spec, a.values - b.values};
}
template <typename Scalar>
GridFunction<Scalar> operator*(Scalar c, const GridFunction<Scalar>& a) {
  return {a.spec, c * a.values};
}

// Multiply by e^{k s_j} row by row.
template <typename Scalar>
GridFunction<Scalar> times_exp_s(const GridFunction<Scalar>& f, double k) {
  GridFunction<Scalar> out = f;
  for (int j = 0; j < f.spec.n_s; ++j) out.values.col(j) *= std::exp(k * f.spec.s(j));
  return out;
}

}  // namespace driftlab
