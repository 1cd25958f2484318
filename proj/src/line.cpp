#include "driftlab/line.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace driftlab::line {

using cplx = std::complex<double>;

LineGrid::LineGrid(double x_min_, double x_max_, int n_) : x_min(x_min_), x_max(x_max_), n(n_) {
  if (!(x_min < x_max)) throw ParameterError("LineGrid: need x_min < x_max");
  if (n < 8) throw ParameterError("LineGrid: need n >= 8");
}

LineField sample(const std::function<double(double)>& rule, const LineGrid& g) {
  LineField f(g);
  for (int i = 0; i < g.n; ++i) {
    const double v = rule(g.x(i));
    if (!std::isfinite(v)) throw DomainError("line::sample: non-finite value at node " + std::to_string(i));
    f.values(i) = v;
  }
  return f;
}

Eigen::ArrayXd trapezoid_weights(const LineGrid& g) {
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(g.n, g.h());
  w(0) *= 0.5;
  w(g.n - 1) *= 0.5;
  return w;
}

template <typename Scalar>
Scalar integrate(const LineFunction<Scalar>& f) {
  return (f.values * trapezoid_weights(f.grid).template cast<Scalar>()).sum();
}

template <typename Scalar>
double lp_norm(const LineFunction<Scalar>& f, double p) {
  if (p < 1.0) throw ParameterError("lp_norm: p must be >= 1");
  const Eigen::ArrayXd a = f.values.abs();
  if (std::isinf(p)) return a.maxCoeff();
  return std::pow((a.pow(p) * trapezoid_weights(f.grid)).sum(), 1.0 / p);
}

template <typename Scalar>
LineFunction<Scalar> derivative(const LineFunction<Scalar>& f, int order) {
  if (order < 0 || order > 3) throw ParameterError("line::derivative: order must be in 0..3");
  LineFunction<Scalar> out = f;
  for (int k = 0; k < order; ++k) {
    const auto& v = out.values;
    const int n = f.grid.n;
    const double h = f.grid.h();
    typename LineFunction<Scalar>::Array d(n);
    for (int i = 1; i + 1 < n; ++i) d(i) = (v(i + 1) - v(i - 1)) / (2.0 * h);
    d(0) = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
    d(n - 1) = (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h);
    out.values = d;
  }
  return out;
}

template <typename Scalar>
LineFunction<Scalar> generator_apply(const LineFunction<Scalar>& f, double shift) {
  const int n = f.grid.n;
  const double h2 = f.grid.h() * f.grid.h();
  LineFunction<Scalar> out(f.grid);
  for (int i = 0; i < n; ++i) {
    const Scalar l = i > 0 ? f.values(i - 1) : Scalar(0);
    const Scalar r = i + 1 < n ? f.values(i + 1) : Scalar(0);
    out.values(i) = (2.0 * f.values(i) - l - r) / h2 + shift * f.values(i);
  }
  return out;
}

double gauss_kernel(double t, double x) {
  if (!(t > 0.0)) throw DomainError("gauss_kernel: t must be positive");
  return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

std::shared_ptr<const RadialProfile> LineHeatModel::table(double t) const {
  if (!(t > 0.0)) throw DomainError("line heat kernel: t must be positive");
  static std::mutex m;
  static std::map<std::pair<double, double>, std::shared_ptr<const RadialProfile>> cache;
  const auto key = std::make_pair(t, r_max_);
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  RadialProfile::Layout L;
  L.dr = std::min(0.02, std::sqrt(t) / 48.0);
  L.r_hi = std::min(r_max_, 60.0 * std::sqrt(t) + 1.0);
  auto P = std::make_shared<const RadialProfile>(RadialProfile::build([t](double x) { return gauss_kernel(t, x); }, L));
  std::lock_guard<std::mutex> lock(m);
  cache[key] = P;
  return P;
}

// ---- convolution ---------------------------------------------------------

namespace {

// Near-field window for the self-weight: erfc step of width rho/10 centred at rho/2.
// Its transform is Gaussian, so the lattice sum of k W is accurate to ~1e-11 once rho
// spans 16 nodes; the smooth_step window converges far slower here.
double erfc_window(double r, double rho) {
  return r >= rho ? 0.0 : 0.5 * std::erfc((r - 0.5 * rho) / (0.1 * rho));
}

int fft_length(int n) {
  int L = 1;
  while (L < 2 * n) L *= 2;
  return L;
}

}  // namespace

LineKernelOperator::LineKernelOperator(std::function<double(double)> k, const LineGrid& g, double mass,
                                       double window_factor)
    : k_(std::move(k)), grid_(g), mass_(mass) {
  const double h = g.h();
  const double rho = window_factor * h;
  auto windowed = [&](double r) { return r > 0.0 ? k_(r) * erfc_window(r, rho) : 0.0; };
  const double exact = 2.0 * quad::origin_singular(windowed, rho, 1e-10);
  double lattice = 0.0;
  for (int q = 1; q * h < rho; ++q) lattice += 2.0 * windowed(q * h) * h;
  D_ = exact - lattice;

  L_ = fft_length(g.n);
  std::vector<cplx> kv(static_cast<std::size_t>(L_), cplx(0.0));
  for (int q = 1; q < g.n; ++q) {
    const double v = k_(q * h);
    kv[static_cast<std::size_t>(q)] = v;
    kv[static_cast<std::size_t>(L_ - q)] = v;
  }
  Eigen::FFT<double> fft;
  fft.fwd(khat_, kv);
}

template <typename Scalar>
LineFunction<Scalar> LineKernelOperator::apply(const LineFunction<Scalar>& f) const {
  if (!(f.grid == grid_)) throw ParameterError("LineKernelOperator::apply: grid mismatch");
  const Eigen::ArrayXd w = trapezoid_weights(grid_);
  std::vector<cplx> row(static_cast<std::size_t>(L_), cplx(0.0)), F, out_c;
  for (int i = 0; i < grid_.n; ++i) row[static_cast<std::size_t>(i)] = cplx(f.values(i)) * w(i);
  Eigen::FFT<double> fft;
  fft.fwd(F, row);
  for (int q = 0; q < L_; ++q) F[static_cast<std::size_t>(q)] *= khat_[static_cast<std::size_t>(q)];
  fft.inv(out_c, F);
  LineFunction<Scalar> out(grid_);
  for (int i = 0; i < grid_.n; ++i) {
    const cplx v = out_c[static_cast<std::size_t>(i)] + D_ * cplx(f.values(i));
    if constexpr (std::is_same_v<Scalar, double>)
      out.values(i) = v.real();
    else
      out.values(i) = v;
  }
  return out;
}

LineField LineKernelOperator::apply_direct(const LineField& f) const {
  const Eigen::ArrayXd w = trapezoid_weights(grid_);
  const double h = grid_.h();
  LineField out(grid_);
  for (int i = 0; i < grid_.n; ++i) {
    double s = D_ * f.values(i);
    for (int m = 0; m < grid_.n; ++m)
      if (m != i) s += k_(std::abs(i - m) * h) * f.values(m) * w(m);
    out.values(i) = s;
  }
  return out;
}

double LineKernelOperator::truncation_mass(const LineField& f) const {
  if (!std::isfinite(mass_)) return std::nan("");
  LineField one(grid_);
  one.values.setOnes();
  const LineField seen = apply(one);
  const double fmax = f.values.abs().maxCoeff();
  double worst = 0.0;
  for (int i = 0; i < grid_.n; ++i)
    if (std::abs(f.values(i)) >= 1e-3 * fmax) worst = std::max(worst, 1.0 - seen.values(i) / mass_);
  return std::max(worst, 0.0);
}

namespace {

template <typename Scalar>
LineFunction<Scalar> heat_apply_impl(const LineFunction<Scalar>& f, double t) {
  auto tab = LineHeatModel(f.grid.x_max - f.grid.x_min + 1.0).table(t);
  LineKernelOperator op([tab](double x) { return (*tab)(x); }, f.grid, 1.0);
  return op.apply(f);
}

}  // namespace

LineField heat_apply(const LineField& f, double t) { return heat_apply_impl(f, t); }
CLineField heat_apply(const CLineField& f, double t) { return heat_apply_impl(f, t); }

template <typename Scalar>
LineFunction<Scalar> fourier_multiplier(const LineFunction<Scalar>& f, const std::function<double(double)>& symbol,
                                        int pad) {
  const int n = f.grid.n;
  int L = 1;
  while (L < pad * n) L *= 2;
  std::vector<cplx> buf(static_cast<std::size_t>(L), cplx(0.0)), F, back;
  for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = cplx(f.values(i));
  Eigen::FFT<double> fft;
  fft.fwd(F, buf);
  const double dxi = 2.0 * std::numbers::pi / (L * f.grid.h());
  for (int q = 0; q < L; ++q) {
    const int kq = q <= L / 2 ? q : q - L;
    F[static_cast<std::size_t>(q)] *= symbol(kq * dxi);
  }
  fft.inv(back, F);
  LineFunction<Scalar> out(f.grid);
  for (int i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<Scalar, double>)
      out.values(i) = back[static_cast<std::size_t>(i)].real();
    else
      out.values(i) = back[static_cast<std::size_t>(i)];
  }
  return out;
}

template double integrate(const LineField&);
template cplx integrate(const CLineField&);
template double lp_norm(const LineField&, double);
template double lp_norm(const CLineField&, double);
template LineField derivative(const LineField&, int);
template CLineField derivative(const CLineField&, int);
template LineField generator_apply(const LineField&, double);
template CLineField generator_apply(const CLineField&, double);
template LineField LineKernelOperator::apply(const LineField&) const;
template CLineField LineKernelOperator::apply(const CLineField&) const;
template LineField fourier_multiplier(const LineField&, const std::function<double(double)>&, int);
template CLineField fourier_multiplier(const CLineField&, const std::function<double(double)>&, int);

}  // namespace driftlab::line
