#pragma once

// The ax+b group G = R x| R_+ and the abelian line used as a closed-form baseline.
//
// Conventions: product (x,a)(x',a') = (x + a x', a a'); right Haar measure
// drho = a^{-1} dx da, left Haar measure dlambda = a^{-2} dx da; modular function
// delta(x,a) = 1/a; characters chi = delta^gamma. Frame X0 = a d/da, X1 = a d/dx.

#include <cmath>
#include <string>

namespace driftlab {

enum class GroupKind { AxB, Line };

struct GroupPoint {
  double x = 0.0;
  double a = 1.0;

  GroupPoint() = default;
  GroupPoint(double x_, double a_);

  double s() const { return std::log(a); }
  static GroupPoint from_s(double x, double s) { return {x, std::exp(s)}; }
};

struct GroupModel {
  GroupKind kind;
  int local_dim;

  static GroupModel axb() { return {GroupKind::AxB, 2}; }
  static GroupModel line() { return {GroupKind::Line, 1}; }
};

inline GroupPoint identity() { return {0.0, 1.0}; }

GroupPoint multiply(const GroupPoint& p, const GroupPoint& q);
GroupPoint inverse(const GroupPoint& p);

double modular(const GroupPoint& p, GroupKind kind = GroupKind::AxB);
double character_eval(double gamma, const GroupPoint& p, GroupKind kind = GroupKind::AxB);

// c_j = (X_j chi)(e) and b_X = |c| / 2.
struct DriftData {
  double c0;
  double c1;
  double bX;
};
DriftData drift_data(double gamma);

double cc_distance(const GroupPoint& p, const GroupPoint& q, GroupKind kind = GroupKind::AxB);

// |(x, e^s)|, the distance to the identity, in coordinates (x, s).
inline double norm_xs(double x, double s) {
  // cosh d = cosh s + x^2 e^{-s} / 2, written to avoid cancellation near e
  const double sh = std::sinh(0.5 * s);
  const double arg = 2.0 * sh * sh + 0.5 * x * x * std::exp(-s);
  return std::acosh(1.0 + arg);
}

// Density of a measure against dx ds.
struct MeasureTag {
  enum Kind { rho, lambda, mu } kind = rho;
  double gamma = 0.0;

  static MeasureTag Rho() { return {rho, 0.0}; }
  static MeasureTag Lambda() { return {lambda, 1.0}; }
  static MeasureTag Mu(double g) { return {mu, g}; }

  // exponent e with density e^{e s}
  double exponent() const {
    switch (kind) {
      case rho: return 0.0;
      case lambda: return -1.0;
      case mu: return -gamma;
    }
    return 0.0;
  }
  double density(double s) const { return std::exp(exponent() * s); }
  std::string name() const;
};

double ball_volume(double r, const MeasureTag& m, GroupKind kind = GroupKind::AxB);

// Geodesic polar coordinates about e on ax+b:
//   a = 1 / (cosh r - sinh r cos th),  x = sinh r sin th * a,  dlambda = sinh r dr dth.
GroupPoint polar_point(double r, double theta);

// A_nu(r) = int_0^{2 pi} a(r, th)^nu dth.
double angular_moment(double r, double nu);

}  // namespace driftlab
