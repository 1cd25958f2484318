#pragma once

// Numerical checks of the Sobolev embeddings of L^p_alpha(mu_gamma), the local
// integrability of Bessel kernels, Young's inequalities on ax+b and the exact
// translation identity that singles out chi = delta.

#include "driftlab/family.hpp"
#include "driftlab/report.hpp"
#include "driftlab/sobolev.hpp"

#include <limits>
#include <string>
#include <vector>

namespace driftlab {

// L^p_alpha(mu_gamma) into L^q(mu_{target}), target = gamma q/p + 1 - q/p; q = inf
// means the weighted sup norm ||(delta chi^{-1})^{-1/p} f||_inf.
struct EmbeddingCase {
  double p = 2.0;
  double q = 4.0;
  double alpha = 1.0;
  double gamma = 1.0;
  int dim = 2;  // local dimension d

  double target_gamma() const { return gamma * q / p + 1.0 - q / p; }
  Json to_json() const;
};

// 'b': alpha >= d/p, q >= p;  'a': q >= p, 1/p - 1/q <= alpha/d, alpha > 0;
// 'c': alpha > d/p, q = inf;  'i': p = q, alpha = 0 (identity).
// Throws ParameterError when no hypothesis applies.
char classify(const EmbeddingCase& c);

// max over the family of ||f||_target / ||f||_{L^p_alpha(mu_gamma)} (spectral route) on
// the grid and on its refinement.
ScanReport embedding_ratio_scan(const EmbeddingCase& c, const std::vector<FamilyMember>& fam, const GridSpec& g);

// In-hypothesis cases for one gamma: interior and endpoint (a), (b) and (c).
std::vector<EmbeddingCase> embedding_battery(double gamma);

// ||delta^a chi^s G^c_{alpha, chi}||_{L^r(rho)} from the radial form
//   int_0^inf g(t)^r A_nu(t) sinh t dt,  nu = r (beta - a - gamma s) + 1,
// with the inner cut eps halved 24 times below 0.05. Finite when the cut increments
// shrink geometrically; the value then includes the geometric remainder. On the
// line the integral is 2 int_0^inf G^r and a, s play no role.
struct IntegrabilityOptions {
  GroupKind kind = GroupKind::AxB;
  double gamma = 0.0;
  double c = 4.0;
  double r_max = 14.0;
  int halvings = 24;
};
ScanReport bessel_integrability_scan(double a, double s, double r, const std::vector<double>& alphas,
                                     const IntegrabilityOptions& opt = {});

// Alphas d(r-1)/r + {-0.3, -0.2, -0.1, 0.1, 0.2, 0.3}.
std::vector<double> threshold_bracket(double r, int dim = 2);

// Young's inequalities for f, g >= 0 on the grid, norms against lambda.
//   q finite:  ||f*g||_q <= ||f||_p ||g_check||_r^{r/p'} ||g||_r^{r/q},  1/p + 1/r = 1 + 1/q
//   q = inf:   ||f*g||_inf <= ||f||_p ||g_check||_{p'}                    (r = p')
// r = NaN derives r from (p, q); a given r must satisfy the relation.
ScanReport young_check(const Field& f, const Field& g, double p, double q,
                       double r = std::numeric_limits<double>::quiet_NaN());

// young_check over `count` seeded random nonnegative bumps near e, cycling through
// exponent pairs that include both forms; one row per pair.
ScanReport young_battery(std::uint64_t seed, int count, const GridSpec& g);
// Rectangle holding f * g for the bumps of young_battery.
GridSpec young_grid(int n = 65);

// ||L_y f||_{L^q(mu_gamma)} = (chi delta^{-1})^{1/q}(y) ||f||_{L^q(mu_gamma)} and the same
// for ||X_J L_y f||_{L^p(mu_gamma)}, |J| <= 2, with L_y f sampled from the rule.
// Throws TruncationError when L_y f does not decay at the edge of the grid.
ScanReport translation_scaling_identity(const FamilyMember& f, const GroupPoint& y, double p, double q, double gamma,
                                        const GridSpec& g);

// log-log slope of ||L_y f||_{L^q(mu_gamma)} / ||L_y f||_{L^p_1(mu_gamma)} along y = (0, a);
// the exact exponent is (1 - gamma)(1/q - 1/p).
ScanReport translation_obstruction_scan(const FamilyMember& f, double p, double q, double gamma,
                                        const std::vector<double>& a_values, const GridSpec& g);

// Rectangle wide enough for translates by |x_y| <= 1, |ln a_y| <= 1 of unit-scale bumps.
GridSpec translation_grid(int n_x = 769, int n_s = 321);

namespace line {

LineField convolve(const LineField& f, const LineField& g);
// g_check(x) = g(-x); exact on grids symmetric about 0
LineField reflect(const LineField& g);
ScanReport young_check(const LineField& f, const LineField& g, double p, double q,
                       double r = std::numeric_limits<double>::quiet_NaN());

}  // namespace line

}  // namespace driftlab
