#pragma once

// Weighted Sobolev norms on (G, mu_gamma) by three routes:
//   spectral          ||f||_p + ||(Delta_chi + c)^{alpha/2} f||_p
//   integer           sum_{|J| <= k} ||X_J f||_p
//   square_function   ||f||_p + ||S_alpha f||_p,  0 < alpha < 1
// plus the transference map, the local maximal function and the inequality scans.

#include "driftlab/bessel.hpp"
#include "driftlab/family.hpp"
#include "driftlab/report.hpp"

#include <limits>
#include <string>

namespace driftlab {

struct SobolevParams {
  double p = 2.0;
  double alpha = 1.0;
  double gamma = 0.0;
  double c = std::numeric_limits<double>::quiet_NaN();  // NaN: use c_min(gamma)

  double shift() const { return std::isnan(c) ? c_min(gamma) : c; }
  BesselParams bessel(double order) const { return {order, gamma, shift()}; }
  Json to_json() const;
};

enum class Route { spectral, integer, square_function };
std::string route_name(Route r);

struct NormReport {
  double value = 0.0;
  Route route = Route::spectral;
  SobolevParams params;
  double lp_term = 0.0;
  double derivative_term = 0.0;
  double truncation_mass = 0.0;
  Json to_json() const;
};

// heat smoothing at t = (2h)^2, h = max(h_x, h_s)
double presmoothing_time(const GridSpec& g);
Field presmooth(const Field& f, double gamma);

// Delta_chi f = -(X0^2 + X1^2) f + gamma X0 f from one-sided-at-the-edge frame stencils
Field frame_generator(const Field& f, double gamma, double shift = 0.0);

// (Delta_chi + c)^{alpha/2} f for alpha in (0, 4]: (Delta_chi + c) B(2 - alpha) f, and
// one more generator factor above 2. The input is expected smooth at grid scale
// (see presmooth).
Field frac_power_apply(const Field& f, const SobolevParams& params);

NormReport sobolev_norm(const Field& f, const SobolevParams& params, Route route);

// S^R_alpha f on every node: polar samples of |f(x y^{-1}) - f(x)| over balls of 25
// log-spaced radii (Simpson in ln u), normalised by rho(B_u). Samples off the rectangle count as zero.
Field square_function(const Field& f, double alpha, double R = 1.0);

// U_p f = chi^{1/p} f (forward) or chi^{-1/p} f (inverse)
Field unitary_map(const Field& f, double p, double gamma, bool forward = true);

// Polar sample points of B(e, r) with drho weights; sum of weights ~ rho(B_r).
struct BallQuadrature {
  double radius = 0.0;
  std::vector<GroupPoint> z;
  std::vector<double> w;
};
BallQuadrature ball_quadrature(double r, int n_r = 8, int n_theta = 24);

// The sampled ball family: centres on every second node, eight radii R (1/16)^{k/7}.
// Nodes no such ball reaches get centred balls of their own.
struct SampledBall {
  int ci, cj;  // centre node
  int k;       // radius index
  std::vector<int> members;  // flat indices i + n_x j of nodes inside
};
std::vector<double> ball_radii(double R);
std::vector<SampledBall> ball_family(const GridSpec& g, double R);

// Integral over c B of h against mu(gamma) restricted to the rectangle, and the
// restricted measure, from the polar samples.
struct BallIntegral {
  double integral = 0.0;
  double measure = 0.0;
};
BallIntegral ball_integral(const Field& h, const GroupPoint& centre, const BallQuadrature& Q, double gamma);

// M^R f: sup of rho-averages of |f| over the sampled balls containing each node. Ball
// averages run over the part of the ball inside the rectangle.
Field maximal_op(const Field& f, double R = 1.0);

// Reusable grid family: fields sampled on a grid.
std::vector<Field> sample_family(const std::vector<FamilyMember>& fam, const GridSpec& g);

// max over the family of ||X_J (Delta_chi + c)^{-m/2} f||_p / ||f||_p, m = |J|, on the
// grid and on its refinement.
ScanReport riesz_ratio_scan(const Word& word, const SobolevParams& params, const std::vector<FamilyMember>& fam,
                            const GridSpec& g);

// ||fg||_{L^p_alpha} against ||f||_{p1} ||g||_{L^{q1}_alpha} + ||f||_{L^{p2}_alpha} ||g||_{q2}
struct ProductExponents {
  double p1, p2, q1, q2;
};
ScanReport product_inequality_scan(const std::vector<std::pair<FamilyMember, FamilyMember>>& pairs,
                                   const SobolevParams& params, const ProductExponents& e, const GridSpec& g);

// ||f||_{L^r_alpha} against ||f||_{L^p_eps}^theta ||f||_{L^q_beta}^{1 - theta}
struct InterpolationExponents {
  double eps, beta, theta, p, q;
};
ScanReport interpolation_inequality_scan(const std::vector<FamilyMember>& fam, double alpha, double r,
                                         const InterpolationExponents& e, double gamma, const GridSpec& g);

namespace line {

// (xi^2 + c)^{s/2} on the Fourier side
LineField fourier_power(const LineField& f, double s, double c);
// (-d^2/dx^2 + c) B(2 - alpha) f
LineField frac_power_apply(const LineField& f, double alpha, double c);
double sobolev_norm_fourier(const LineField& f, double p, double alpha, double c);
LineField square_function(const LineField& f, double alpha, double R = 1.0);
// max over the family of ||d^m/dx^m (-d^2/dx^2 + c)^{-m/2} f||_p / ||f||_p on the grid
// and its refinement, m in {1, 2}
ScanReport riesz_ratio_scan(int m, double p, double c, const std::vector<LineMember>& fam, const LineGrid& g);

}  // namespace line

}  // namespace driftlab
