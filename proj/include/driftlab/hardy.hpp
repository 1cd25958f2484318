#pragma once

// Local Hardy atoms and bmo norms on (G, d_C, mu_gamma), and the two families behind
// the failure of the algebra and bmo properties away from chi = delta:
//   g_nu(x, a) = psi(x/a) phi(a) a^{-nu}         (or phi_tilde in place of phi)
//   A_y(x, a)  = A(x/y, a/y) y^{eta - 1},  A = 1_{[0,1]x[1/2,3/2]} - 1_{[-1,0]x[1/2,3/2]}

#include "driftlab/grid.hpp"
#include "driftlab/report.hpp"

#include <functional>
#include <string>
#include <vector>

namespace driftlab {

struct BumpProfiles {
  std::function<double(double)> psi;        // supported in (0,1), 1 on [1/4, 3/4]
  std::function<double(double)> phi;        // supported in (-1,1), 1 on [0, 1/2]
  std::function<double(double)> phi_tilde;  // 0 on [0, 1/2], 1 on [1, inf)

  // Built from smooth_step.
  static BumpProfiles canonical();
  // Samples the support, plateau and range constraints; throws ParameterError.
  void validate() const;
};

enum class AtomKind { standard, global };
std::string atom_kind_name(AtomKind k);

struct Atom {
  GroupPoint centre;
  double radius = 0.0;
  AtomKind kind = AtomKind::standard;
  double gamma = 0.0;
  Field values;
  double ball_measure = 0.0;  // mu_gamma(B), closed form
  double l2 = 0.0;            // ||a||_{L^2(mu_gamma)}
  double l1 = 0.0;
  double mean = 0.0;          // int a dmu_gamma
};

// Smooth radial bump on B(centre, radius); the standard kind subtracts a multiple of a
// bump on the half ball so that the discrete mu_gamma integral vanishes. Scaled to
// ||a||_2 = mu_gamma(B)^{-1/2}. Admissible radii are <= s (standard) or = s (global),
// s = 1 for h^1 proper.
// Throws ParameterError (radius), ResolutionError (radius < 4h, with h the group-scale
// spacing at the centre), TruncationError (ball leaves the grid).
Atom make_atom(const GroupPoint& centre, double radius, AtomKind kind, double gamma, const GridSpec& g,
               double s = 1.0);

struct BmoNorm {
  double oscillation = 0.0;  // max over balls of radius <= 1 of (avg |g - g_B|^2)^{1/2}
  double average = 0.0;      // max over unit balls of (avg |g|^2)^{1/2}
  double value = 0.0;        // sum
  Json to_json() const;
};

// Balls centred on every `stride`-th node with the radii of ball_radii(1); averages are
// against mu_gamma over the part of the ball inside the rectangle. Works on both charts.
BmoNorm bmo_norm(const Field& g, double gamma, int stride = 2);

enum class Variant { compact, tilde };
std::string variant_name(Variant v);

double g_nu_value(const GroupPoint& p, double nu, Variant v, const BumpProfiles& prof);
Field g_nu(double nu, Variant v, const GridSpec& g, const BumpProfiles& prof = BumpProfiles::canonical());

// Throws TruncationError when the grid does not contain the support of A_y.
Field atom_family_Ay(double y, double eta, const GridSpec& g);
// Smallest s with supp A inside B(e, s): the largest corner distance of [-1,1] x [1/2,3/2].
double atom_support_radius();
// ||A_y||_{L^2(mu_eta)} mu_eta(B((0,y), s))^{1/2}, from the grid norm and the closed-form ball.
double atom_family_constant(const Field& A, double y, double eta);

// Wedge grid carrying supp A_y (t in [-2, 2], s in [ln(y/2), ln(3y/2)]).
GridSpec pairing_grid(double y, int n_t = 401, int n_s = 111);

// The nu windows: ((1 - gamma)/(2p), (1 - gamma)/p) for gamma < 1, reversed for gamma > 1.
struct NuWindow {
  double lo, hi;
  Variant variant;
};
NuWindow nu_window(double gamma, double p);

// P(y) = int g_nu A_y dmu_{delta^eta} on a geometric y grid and the fitted log-log slope,
// expected -nu. Refuses gamma = 1 and nu outside the window.
ScanReport nobmo_scan(double gamma, double p, double nu, double eta, const std::vector<double>& ys);
// Geometric y grid: [1/64, 1/4] for gamma < 1, [4, 64] for gamma > 1.
std::vector<double> default_y_grid(double gamma, int count = 7);

// On wedge grids truncated at depth L (a > e^{-L} compact, a < e^{L} tilde): integer-route
// L^p_k norms of g_nu and ||g_nu^2||_p. The power of ||g_nu^2||_p in eps = e^{-L} is fitted
// on the increments of its p-th power between consecutive depths.
ScanReport algebra_failure_scan(double gamma, double p, double nu, int k, const std::vector<double>& depths);
std::vector<double> default_depths();
GridSpec truncated_grid(Variant v, double depth, int n_t = 129, double h_s = 0.05);

// Finite/divergent classification of ||g_nu||_p and ||g_nu^2||_p over a nu grid; the two
// flips must land within one grid step of (1 - gamma)/p and (1 - gamma)/(2p).
ScanReport algebra_window_scan(double gamma, double p, const std::vector<double>& nus,
                               const std::vector<double>& depths);

}  // namespace driftlab
