#pragma once

// Semilinear Cauchy problems by Duhamel/Picard iteration:
//   heat          u_t + Delta_chi u = F(u)
//   Schrodinger   i u_t + L u = F(u),  L = Delta_delta (gamma = 1, p = 2)
// in the space Y = L^p_alpha(mu_gamma) cap L^infty with the norm ||u||_{L^p_alpha} + ||u||_inf.

#include "driftlab/family.hpp"
#include "driftlab/grid.hpp"
#include "driftlab/line.hpp"
#include "driftlab/report.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace driftlab {

using cplx = std::complex<double>;

struct Nonlinearity {
  std::string name;
  std::function<double(double)> F;  // real rule
  std::function<cplx(cplx)> Fc;     // complex rule; empty means F is only used on real data

  static Nonlinearity zero();
  static Nonlinearity power(int k);  // u^k
  static Nonlinearity cubic_nls();   // |u|^2 u
  static Nonlinearity quintic_nls(); // |u|^4 u
  static Nonlinearity affine_square(double c);  // u^2 + c
  static Nonlinearity identity_map();           // u
};

struct AdmissibilityReport {
  bool admissible = false;
  int order = 0;                     // floor(alpha)
  std::vector<double> derivatives;   // |d^k F(0)|, k = 0..order (max over components)
  Json to_json() const;
};

// All partial derivatives of order <= floor(alpha) vanish at 0, by Richardson-extrapolated
// central differences, tolerance 1e-6. Complex rules are read as maps R^2 -> R^2.
AdmissibilityReport admissibility_check(const Nonlinearity& F, double alpha);
AdmissibilityReport admissibility_check(const std::function<double(double, double)>& G, double alpha);

// The space Y^p_alpha(mu_gamma) on a grid; alpha must be 0, 1 or 2 (integer route).
struct YSpace {
  GroupKind group = GroupKind::AxB;
  GridSpec grid;
  line::LineGrid line_grid;
  double p = 2.0;
  int alpha = 1;
  double gamma = 0.0;

  Json to_json() const;
};
double y_norm(const Field& u, const YSpace& Y);
double y_norm(const CField& u, const YSpace& Y);
double y_norm(const line::LineField& u, const YSpace& Y);
double y_norm(const line::CLineField& u, const YSpace& Y);

struct LipschitzReport {
  double c = 0.0;           // 2 x empirical sup
  double empirical = 0.0;
  double empirical_refined = 0.0;
  int pairs = 0;
  int skipped = 0;          // pairs with ||u - v|| < 1e-10
  Json to_json() const;
};
// Sup of ||F(u) - F(v)||_Y / ||u - v||_Y over seeded pairs with ||u||_Y, ||v||_Y <= R, times 2.
// The same shapes are scaled by R, so c(R) is comparable across R. Throws ScientificFailure
// when the refined grid raises the sup by more than 25%.
LipschitzReport lipschitz_estimate(const Nonlinearity& F, double R, const YSpace& Y, bool complex_data = false,
                                   int samples = 12, std::uint64_t seed = 7);

enum class PdeKind { heat, schrodinger };
std::string pde_kind_name(PdeKind k);

struct CauchyProblem {
  PdeKind kind = PdeKind::heat;
  YSpace space;
  std::function<double(const GroupPoint&)> u0;  // on the line the rule reads p.x
  double tau = 0.5;
  int n_t = 10;
  double R = std::numeric_limits<double>::quiet_NaN();  // NaN: 2 ||u0||_Y
  int max_iterations = 50;
  double tolerance = 1e-6;

  Json to_json() const;
};

// The run refuses when c(R) tau > 1/2.
struct WindowRefusal : std::invalid_argument {
  double c_tau;
  WindowRefusal(const std::string& what, double ct) : std::invalid_argument(what), c_tau(ct) {}
};

struct SolutionTrajectory {
  PdeKind kind = PdeKind::heat;
  GroupKind group = GroupKind::AxB;
  GridSpec grid;
  line::LineGrid line_grid;
  std::vector<double> times;
  std::vector<Eigen::ArrayXXcd> states;  // (n_x, n_s), or (n, 1) on the line
  std::vector<double> y_norms;
  std::vector<double> history;           // sup_t ||u^{(m+1)} - u^{(m)}||_Y
  std::vector<double> masses;            // dirichlet_l2(u(t))
  bool converged = false;
  double R = 0.0;
  LipschitzReport lipschitz;
  double c_tau = 0.0;
  double max_contraction = 0.0;          // max ratio of successive differences after the second
  double bound_constant = 0.0;           // sup_t ||u(t)||_Y / ||u0||_Y
  double residual = 0.0;                 // max over interior times of the interior L^2 residual
  double residual_tolerance = 0.0;       // interior 10 (h^2 + dt^2) (||Delta u0|| + ||Delta^2 u0||)
  double min_value = 0.0;                // min real part over the trajectory

  Field real_field(std::size_t k) const;
  CField complex_field(std::size_t k) const;
  line::LineField real_line(std::size_t k) const;
  line::CLineField complex_line(std::size_t k) const;
  Json to_json() const;  // summary without the fields
};

// Propagator e^{-t Delta_chi} by heat_apply at every time lag; Duhamel integral by the composite
// trapezoid rule on the trajectory's time grid.
SolutionTrajectory picard_heat(const CauchyProblem& problem, const Nonlinearity& F);

// Propagator e^{itL} by Crank-Nicolson steps of the generator stencil; needs gamma = 1, p = 2
// and alpha > d/2.
SolutionTrajectory picard_schrodinger(const CauchyProblem& problem, const Nonlinearity& F);

// L^2(mu_gamma) norm with the full cell weight at every node: the trapezoid rule on the
// rectangle enlarged by the ghost layer carrying the zero Dirichlet data. The
// Crank-Nicolson flow is unitary for this norm.
template <typename S>
double dirichlet_l2(const GridFunction<S>& u, double gamma);
template <typename S>
double dirichlet_l2(const line::LineFunction<S>& u);

// Crank-Nicolson flow of the linear equation, n steps of dt (negative dt runs backwards).
CField schrodinger_flow(const CField& u, double dt, int steps);
line::CLineField schrodinger_flow(const line::CLineField& u, double dt, int steps);

// max over pairs (sup norms scaled to R) of ||G(f1, f2)||_{L^p_alpha} / (||f1||_{L^p_alpha} + ||f2||_{L^p_alpha})
// on the grid and its refinement (spectral route, integer route for integer alpha).
ScanReport composition_inequality_scan(const std::function<double(double, double)>& G, double alpha, double p,
                                       double R, const std::vector<std::pair<FamilyMember, FamilyMember>>& pairs,
                                       double gamma, const GridSpec& g);

// Adds the trajectory summary under `id` with the checks converged, contraction <= 0.6,
// bound <= 3 and residual within tolerance.
void record_trajectory(ScanReport& R, const std::string& id, const SolutionTrajectory& T);

// Grids of the pde battery.
GridSpec pde_grid(int n = 65);
line::LineGrid pde_line_grid(int n = 801);

// The pde battery: heat on ax+b (gamma in {0, 2}) and on the line, Schrodinger on ax+b and on
// the line, the linear reductions and the window refusal.
ScanReport pde_battery();

// Writes one binary field per saved step and a JSON manifest.
void export_trajectory(const SolutionTrajectory& T, const std::string& dir);

}  // namespace driftlab
