#include "driftlab/group.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/quadrature.hpp"

#include <numbers>

namespace driftlab {

GroupPoint::GroupPoint(double x_, double a_) : x(x_), a(a_) {
  if (!(a_ > 0.0) || !std::isfinite(a_) || !std::isfinite(x_))
    throw DomainError("GroupPoint requires a finite x and a > 0, got a = " + std::to_string(a_));
}

GroupPoint multiply(const GroupPoint& p, const GroupPoint& q) { return {p.x + p.a * q.x, p.a * q.a}; }

GroupPoint inverse(const GroupPoint& p) { return {-p.x / p.a, 1.0 / p.a}; }

double modular(const GroupPoint& p, GroupKind kind) { return kind == GroupKind::Line ? 1.0 : 1.0 / p.a; }

double character_eval(double gamma, const GroupPoint& p, GroupKind kind) {
  return kind == GroupKind::Line ? 1.0 : std::pow(p.a, -gamma);
}

DriftData drift_data(double gamma) {
  // X0 a^{-gamma} = -gamma a^{-gamma}; X1 kills functions of a alone.
  const double c0 = -gamma;
  const double c1 = 0.0;
  return {c0, c1, 0.5 * std::hypot(c0, c1)};
}

double cc_distance(const GroupPoint& p, const GroupPoint& q, GroupKind kind) {
  if (kind == GroupKind::Line) return std::abs(p.x - q.x);
  const double dx = p.x - q.x;
  const double da = p.a - q.a;
  const double u = (dx * dx + da * da) / (2.0 * p.a * q.a);
  // acosh(1 + u) without cancellation for small u
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

std::string MeasureTag::name() const {
  switch (kind) {
    case rho: return "rho";
    case lambda: return "lambda";
    case mu: return "mu(" + std::to_string(gamma) + ")";
  }
  return "?";
}

double ball_volume(double r, const MeasureTag& m, GroupKind kind) {
  if (!(r > 0.0)) throw DomainError("ball_volume: radius must be positive");
  if (kind == GroupKind::Line) return 2.0 * r;
  // Window: beyond this the a-range of the ball overflows the integrand scale.
  constexpr double r_window = 40.0;
  if (r > r_window) throw TruncationError("ball_volume: radius exceeds the quadrature window");
  const double e = m.exponent();
  const double chr = std::cosh(r);
  // ball = {|s| <= r, |x| <= sqrt(2 e^s (cosh r - cosh s))}
  auto integrand = [&](double s) {
    const double w = 2.0 * std::exp(s) * (chr - std::cosh(s));
    return w > 0.0 ? 2.0 * std::sqrt(w) * std::exp(e * s) : 0.0;
  };
  return quad::tanh_sinh(integrand, -r, r, 1e-12);
}

namespace {
// cosh r - sinh r cos th = e^{-r} cos^2(th/2) + e^{r} sin^2(th/2), free of cancellation
inline double polar_denominator(double r, double th) {
  const double c = std::cos(0.5 * th), s = std::sin(0.5 * th);
  return std::exp(-r) * c * c + std::exp(r) * s * s;
}
}  // namespace

GroupPoint polar_point(double r, double theta) {
  const double a = 1.0 / polar_denominator(r, theta);
  return {std::sinh(r) * std::sin(theta) * a, a};
}

double angular_moment(double r, double nu) {
  if (r < 1e-4) {
    // 2 pi P_{nu-1}(cosh r) to O(r^4)
    const double sh = std::sinh(0.5 * r);
    return 2.0 * std::numbers::pi * (1.0 + nu * (nu - 1.0) * sh * sh);
  }
  // u = tan(th/2), v = e^r u, v = e^w:
  //   A_nu = 4 e^{r (nu - 1)} int (1 + v^2)^{-nu} (1 + e^{-2r} v^2)^{nu - 1} v dw,
  // a smooth integrand with knees at w = 0 and w = r.
  const double e2r = std::exp(-2.0 * r);
  auto f = [&](double w) {
    const double v2 = std::exp(2.0 * w);
    return std::exp(w - nu * std::log1p(v2) + (nu - 1.0) * std::log1p(e2r * v2));
  };
  const double I = quad::gk(f, -40.0, 0.0, 1e-12) + quad::gk(f, 0.0, r, 1e-12) + quad::gk(f, r, r + 40.0, 1e-12);
  return 4.0 * std::exp(r * (nu - 1.0)) * I;
}

}  // namespace driftlab
