#include "driftlab/hardy.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/smooth.hpp"
#include "driftlab/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace driftlab {

namespace {

constexpr double kEdgeTol = 1e-12;

// bilinear value at a group point in chart coordinates; `inside` reports the rectangle test
double chart_bilinear(const Field& f, const GroupPoint& p, double& S, bool& inside) {
  const GridSpec& g = f.spec;
  double X;
  g.chart_coords(p, X, S);
  const double u = (X - g.x_min) / g.hx(), w = (S - g.s_min) / g.hs();
  inside = u >= 0.0 && w >= 0.0 && u <= g.n_x - 1 && w <= g.n_s - 1;
  if (!inside) return 0.0;
  const int i = std::min(static_cast<int>(u), g.n_x - 2), j = std::min(static_cast<int>(w), g.n_s - 2);
  const double fu = u - i, fw = w - j;
  const auto& v = f.values;
  return (1 - fu) * (1 - fw) * v(i, j) + fu * (1 - fw) * v(i + 1, j) + (1 - fu) * fw * v(i, j + 1) +
         fu * fw * v(i + 1, j + 1);
}

bool contains(const GridSpec& g, double c1, double s) {
  const double tx = kEdgeTol * std::max(1.0, std::abs(g.x_max - g.x_min));
  const double ts = kEdgeTol * std::max(1.0, std::abs(g.s_max - g.s_min));
  return c1 >= g.x_min - tx && c1 <= g.x_max + tx && s >= g.s_min - ts && s <= g.s_max + ts;
}

// group-scale spacing near the centre
double group_spacing(const GridSpec& g, const GroupPoint& c) {
  return std::max(g.chart == Chart::Affine ? g.hx() / c.a : g.hx(), g.hs());
}

bool in_closed(double v, double lo, double hi) {
  return v >= lo - kEdgeTol * std::abs(lo) && v <= hi + kEdgeTol * std::abs(hi);
}

// rate lambda of D_k ~ e^{lambda L_k} from the increments of a truncated p-th power
double increment_rate(const std::vector<double>& depths, const std::vector<double>& power) {
  std::vector<double> L, logd;
  for (std::size_t k = 1; k < power.size(); ++k) {
    const double d = power[k] - power[k - 1];
    L.push_back(depths[k]);
    logd.push_back(std::log(std::max(d, std::numeric_limits<double>::min())));
  }
  return fit_line(L, logd).slope;
}

// decay below this rate per unit depth counts as summable
constexpr double kFiniteRate = -0.005;

void check_depths(const std::vector<double>& depths) {
  if (depths.size() < 3) throw ParameterError("need at least three truncation depths");
  const double step = depths[1] - depths[0];
  for (std::size_t k = 1; k < depths.size(); ++k)
    if (!(depths[k] > depths[k - 1]) || std::abs(depths[k] - depths[k - 1] - step) > 1e-9)
      throw ParameterError("truncation depths must increase with a uniform step");
}

// exponent e of the a-integrand a^e of ||g_nu^m||_p^p and the divergence exponent of the norm
double a_exponent(double gamma, double p, double nu, int m) { return -m * nu * p - gamma; }

}  // namespace

// ---- profiles ----------------------------------------------------------------

BumpProfiles BumpProfiles::canonical() {
  BumpProfiles P;
  P.psi = [](double t) { return smooth_step(4.0 * t) * smooth_step(4.0 * (1.0 - t)); };
  P.phi = [](double a) { return smooth_step(2.0 * (1.0 - std::abs(a))); };
  P.phi_tilde = [](double a) { return smooth_step(2.0 * a - 1.0); };
  return P;
}

void BumpProfiles::validate() const {
  if (!psi || !phi || !phi_tilde) throw ParameterError("BumpProfiles: missing profile");
  auto fail = [](const char* what) { throw ParameterError(std::string("BumpProfiles: ") + what); };
  for (int k = 0; k <= 2000; ++k) {
    const double u = -1.5 + 4.0 * k / 2000.0;
    const double vp = psi(u), vf = phi(u), vt = phi_tilde(u);
    for (double v : {vp, vf, vt})
      if (!(v >= 0.0 && v <= 1.0)) fail("values must lie in [0, 1]");
    if ((u <= 0.0 || u >= 1.0) && vp != 0.0) fail("psi must vanish off (0, 1)");
    if (u >= 0.25 && u <= 0.75 && vp != 1.0) fail("psi must be 1 on [1/4, 3/4]");
    if (std::abs(u) >= 1.0 && vf != 0.0) fail("phi must vanish off (-1, 1)");
    if (u >= 0.0 && u <= 0.5 && vf != 1.0) fail("phi must be 1 on [0, 1/2]");
    if (u >= 0.0 && u <= 0.5 && vt != 0.0) fail("phi_tilde must vanish on [0, 1/2]");
    if (u >= 1.0 && vt != 1.0) fail("phi_tilde must be 1 on [1, inf)");
  }
}

// ---- atoms -------------------------------------------------------------------

std::string atom_kind_name(AtomKind k) { return k == AtomKind::standard ? "standard" : "global"; }

Atom make_atom(const GroupPoint& centre, double radius, AtomKind kind, double gamma, const GridSpec& g, double s) {
  if (!(s > 0.0)) throw ParameterError("make_atom: the ball scale must be positive");
  if (!(radius > 0.0)) throw ParameterError("make_atom: radius must be positive");
  if (kind == AtomKind::standard && radius > s * (1.0 + 1e-12))
    throw ParameterError("make_atom: standard atoms need radius <= " + std::to_string(s));
  if (kind == AtomKind::global && std::abs(radius - s) > 1e-12 * s)
    throw ParameterError("make_atom: global atoms live on balls of radius " + std::to_string(s));
  if (radius < 4.0 * group_spacing(g, centre))
    throw ResolutionError("make_atom: ball radius below four grid spacings");
  for (int k = 0; k < 256; ++k) {
    double c1, S;
    g.chart_coords(multiply(centre, polar_point(radius, 2.0 * M_PI * k / 256.0)), c1, S);
    if (!contains(g, c1, S)) throw TruncationError("make_atom: the ball leaves the grid");
  }

  Atom A;
  A.centre = centre;
  A.radius = radius;
  A.kind = kind;
  A.gamma = gamma;
  const MeasureTag mu = MeasureTag::Mu(gamma);
  Field outer(g), inner(g);
  for (int j = 0; j < g.n_s; ++j)
    for (int i = 0; i < g.n_x; ++i) {
      const double d = cc_distance(centre, g.point(i, j));
      outer.values(i, j) = smooth_window(d, radius);
      inner.values(i, j) = smooth_window(d, 0.5 * radius);
    }
  A.values = outer;
  if (kind == AtomKind::standard) {
    const Eigen::ArrayXXd w = quadrature_weights(g, mu);
    const double I_in = (w * inner.values).sum();
    if (!(I_in > 0.0)) throw ResolutionError("make_atom: inner bump not resolved");
    A.values.values = outer.values - ((w * outer.values).sum() / I_in) * inner.values;
  }
  A.ball_measure = character_eval(gamma, centre) * centre.a * ball_volume(radius, mu);
  const double n2 = lp_norm(A.values, 2.0, mu);
  if (!(n2 > 0.0)) throw ResolutionError("make_atom: no node inside the ball");
  A.values.values *= 1.0 / (n2 * std::sqrt(A.ball_measure));

  A.l2 = lp_norm(A.values, 2.0, mu);
  A.l1 = lp_norm(A.values, 1.0, mu);
  A.mean = integrate(A.values, mu);
  if (A.l2 > (1.0 + 1e-6) / std::sqrt(A.ball_measure)) throw ScientificFailure("make_atom: size bound violated");
  if (kind == AtomKind::standard && std::abs(A.mean) > 1e-8 * A.l1)
    throw ScientificFailure("make_atom: cancellation violated");
  return A;
}

// ---- bmo ---------------------------------------------------------------------

Json BmoNorm::to_json() const {
  return {{"oscillation", number(oscillation)}, {"average", number(average)}, {"value", number(value)}};
}

BmoNorm bmo_norm(const Field& f, double gamma, int stride) {
  if (stride < 1) throw ParameterError("bmo_norm: stride must be positive");
  const GridSpec& g = f.spec;
  const std::vector<double> radii = ball_radii(1.0);
  std::vector<BallQuadrature> Q;
  for (double r : radii) Q.push_back(ball_quadrature(r));

  std::vector<std::pair<int, int>> centres;
  for (int j = 0; j < g.n_s; j += stride)
    for (int i = 0; i < g.n_x; i += stride) centres.push_back({i, j});

  double osc = 0.0, avg = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : osc, avg)
  for (std::size_t c = 0; c < centres.size(); ++c) {
    const GroupPoint centre = g.point(centres[c].first, centres[c].second);
    std::vector<double> v, w;
    for (std::size_t k = 0; k < Q.size(); ++k) {
      v.clear(), w.clear();
      for (std::size_t q = 0; q < Q[k].z.size(); ++q) {
        double S;
        bool in;
        const double val = chart_bilinear(f, multiply(centre, Q[k].z[q]), S, in);
        if (!in) continue;
        v.push_back(val);
        w.push_back(Q[k].w[q] * std::exp(-gamma * S));
      }
      double W = 0.0, m = 0.0;
      for (std::size_t n = 0; n < v.size(); ++n) W += w[n], m += w[n] * v[n];
      if (!(W > 0.0)) continue;
      m /= W;
      double o = 0.0, a = 0.0;
      for (std::size_t n = 0; n < v.size(); ++n) o += w[n] * (v[n] - m) * (v[n] - m), a += w[n] * v[n] * v[n];
      osc = std::max(osc, std::sqrt(o / W));
      if (k == 0) avg = std::max(avg, std::sqrt(a / W));
    }
  }
  return {osc, avg, osc + avg};
}

// ---- the counterexample families -----------------------------------------------

std::string variant_name(Variant v) { return v == Variant::compact ? "compact" : "tilde"; }

double g_nu_value(const GroupPoint& p, double nu, Variant v, const BumpProfiles& prof) {
  const double t = p.x / p.a;
  if (!(t > 0.0 && t < 1.0)) return 0.0;
  const double cut = v == Variant::compact ? prof.phi(p.a) : prof.phi_tilde(p.a);
  if (cut == 0.0) return 0.0;
  return prof.psi(t) * cut * std::pow(p.a, -nu);
}

Field g_nu(double nu, Variant v, const GridSpec& g, const BumpProfiles& prof) {
  prof.validate();
  return sample([&](const GroupPoint& p) { return g_nu_value(p, nu, v, prof); }, g);
}

Field atom_family_Ay(double y, double eta, const GridSpec& g) {
  if (!(y > 0.0)) throw ParameterError("atom_family_Ay: y must be positive");
  const double s_lo = std::log(0.5 * y), s_hi = std::log(1.5 * y);
  const double c_lo = g.chart == Chart::Affine ? -y : -2.0, c_hi = -c_lo;
  if (!contains(g, c_lo, s_lo) || !contains(g, c_hi, s_hi))
    throw TruncationError("atom_family_Ay: the grid clips the support of A_y");
  const double scale = std::pow(y, eta - 1.0);
  return sample(
      [&](const GroupPoint& p) {
        const double u = p.x / y, b = p.a / y;
        if (!in_closed(b, 0.5, 1.5) || u == 0.0) return 0.0;
        if (in_closed(u, 0.0, 1.0)) return scale;
        if (in_closed(u, -1.0, 0.0)) return -scale;
        return 0.0;
      },
      g);
}

double atom_support_radius() {
  // |z| grows with |x| and is convex in s along x = +-1, so a corner is farthest
  double r = 0.0;
  for (double a : {0.5, 1.5}) r = std::max(r, norm_xs(1.0, std::log(a)));
  return r;
}

double atom_family_constant(const Field& A, double y, double eta) {
  const MeasureTag mu = MeasureTag::Mu(eta);
  const double ball = std::pow(y, 1.0 - eta) * ball_volume(atom_support_radius(), mu);
  return lp_norm(A, 2.0, mu) * std::sqrt(ball);
}

GridSpec pairing_grid(double y, int n_t, int n_s) {
  return GridSpec(-2.0, 2.0, std::log(0.5 * y), std::log(1.5 * y), n_t, n_s, Chart::Wedge);
}

NuWindow nu_window(double gamma, double p) {
  if (!(p >= 1.0)) throw ParameterError("p must be at least 1");
  if (std::abs(gamma - 1.0) < 1e-12) throw ParameterError("gamma = 1 is the case chi = delta, excluded");
  const double a = (1.0 - gamma) / p, b = (1.0 - gamma) / (2.0 * p);
  return gamma < 1.0 ? NuWindow{b, a, Variant::compact} : NuWindow{a, b, Variant::tilde};
}

std::vector<double> default_y_grid(double gamma, int count) {
  const double lo = gamma < 1.0 ? 1.0 / 64.0 : 4.0, hi = gamma < 1.0 ? 0.25 : 64.0;
  std::vector<double> ys;
  for (int k = 0; k < count; ++k) ys.push_back(lo * std::pow(hi / lo, double(k) / (count - 1)));
  return ys;
}

ScanReport nobmo_scan(double gamma, double p, double nu, double eta, const std::vector<double>& ys) {
  const NuWindow W = nu_window(gamma, p);
  if (!(nu > W.lo && nu < W.hi))
    throw ParameterError("nobmo_scan: nu must lie in (" + std::to_string(W.lo) + ", " + std::to_string(W.hi) + ")");

  ScanReport R;
  R.name = "nobmo_scan";
  R.params = {{"gamma", gamma}, {"p", p}, {"nu", nu}, {"eta", eta}, {"variant", variant_name(W.variant)}};
  std::vector<double> keep;
  for (double y : ys) {
    if (!(y > 0.0)) throw ParameterError("nobmo_scan: y must be positive");
    if (y < 1e-8 || y > 1e8)
      R.warnings.push_back("y = " + std::to_string(y) + " outside the resolvable range, dropped");
    else
      keep.push_back(y);
  }
  if (keep.size() < 2) throw ParameterError("nobmo_scan: fewer than two usable y values");

  const BumpProfiles prof = BumpProfiles::canonical();
  std::vector<double> P(keep.size()), K(keep.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const GridSpec g = pairing_grid(keep[k]);
    const Field A = atom_family_Ay(keep[k], eta, g);
    const Field G = g_nu(nu, W.variant, g, prof);
    P[k] = integrate(Field(g, G.values * A.values), MeasureTag::Mu(eta));
    K[k] = atom_family_constant(A, keep[k], eta);
  }

  R.columns = {"y", "pairing", "atom_constant", "normalised_pairing"};
  std::vector<double> lx, ly;
  double kmin = INFINITY, kmax = 0.0, best = 0.0;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    R.rows.push_back({keep[k], P[k], K[k], P[k] / K[k]});
    lx.push_back(std::log(keep[k]));
    ly.push_back(std::log(std::abs(P[k])));
    kmin = std::min(kmin, K[k]), kmax = std::max(kmax, K[k]);
    best = std::max(best, std::abs(P[k]) / K[k]);
  }
  const LineFit F = fit_line(lx, ly);
  R.values["slope"] = number(F.slope);
  R.values["slope_half_width"] = number(F.half_width);
  R.values["expected_slope"] = -nu;
  R.values["support_radius"] = atom_support_radius();
  R.values["atom_constant_spread"] = number((kmax - kmin) / kmin);
  R.values["max_normalised_pairing"] = number(best);
  R.check("slope_within_10pct", std::abs(F.slope + nu) <= 0.1 * std::abs(nu));
  R.check("atom_constant_flat", (kmax - kmin) <= 0.05 * kmin);
  // the normalised pairing must grow in the direction of the limit (y -> 0 or y -> inf)
  const double first = std::abs(P.front()) / K.front(), last = std::abs(P.back()) / K.back();
  R.check("pairing_unbounded", gamma < 1.0 ? first > last : last > first);
  return R;
}

// ---- algebra failure -------------------------------------------------------------

std::vector<double> default_depths() { return {4, 6, 8, 10, 12, 14, 16}; }

GridSpec truncated_grid(Variant v, double depth, int n_t, double h_s) {
  const double s_lo = v == Variant::compact ? -depth : -0.75, s_hi = v == Variant::compact ? 0.05 : depth;
  const int n_s = static_cast<int>(std::lround((s_hi - s_lo) / h_s)) + 1;
  return GridSpec(0.0, 1.0, s_lo, s_hi, n_t, n_s, Chart::Wedge);
}

ScanReport algebra_failure_scan(double gamma, double p, double nu, int k, const std::vector<double>& depths) {
  const NuWindow W = nu_window(gamma, p);
  if (k < 0 || k > 2) throw ParameterError("algebra_failure_scan: k must be 0, 1 or 2");
  check_depths(depths);
  // g_nu itself must be in L^p: the a-exponent e of |g|^p has e + 1 of the right sign
  const double e1 = a_exponent(gamma, p, nu, 1) + 1.0;
  if (W.variant == Variant::compact ? !(e1 > 0.0) : !(e1 < 0.0))
    throw ParameterError("algebra_failure_scan: g_nu is not in L^p for this nu");
  const bool in_window = nu > W.lo && nu < W.hi;

  ScanReport R;
  R.name = "algebra_failure_scan";
  R.params = {{"gamma", gamma}, {"p", p}, {"nu", nu}, {"k", k}, {"variant", variant_name(W.variant)}};
  const MeasureTag mu = MeasureTag::Mu(gamma);
  const BumpProfiles prof = BumpProfiles::canonical();
  const std::size_t n = depths.size();
  std::vector<double> sob(n), g2(n), g2p(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t d = 0; d < n; ++d) {
    const GridSpec g = truncated_grid(W.variant, depths[d]);
    const Field G = g_nu(nu, W.variant, g, prof);
    SobolevParams sp;
    sp.p = p, sp.alpha = k, sp.gamma = gamma;
    sob[d] = sobolev_norm(G, sp, Route::integer).value;
    g2[d] = lp_norm(Field(g, G.values.square()), p, mu);
    g2p[d] = std::pow(g2[d], p);
  }
  R.columns = {"depth", "eps", "sobolev_norm", "square_norm"};
  for (std::size_t d = 0; d < n; ++d) R.rows.push_back({depths[d], std::exp(-depths[d]), sob[d], g2[d]});

  const double sob_change = std::abs(sob[n - 1] - sob[n - 2]) / sob[n - 1];
  const double lambda = increment_rate(depths, g2p);
  const bool divergent = lambda >= kFiniteRate;
  // ||g^2||_p ~ eps^{-kappa}; kappa > 0 means divergence
  const double e2 = a_exponent(gamma, p, nu, 2) + 1.0;
  const double kappa = (W.variant == Variant::compact ? -e2 : e2) / p;
  const double fitted = lambda / p;
  R.values["sobolev_rel_change"] = number(sob_change);
  R.values["square_norm_last"] = number(g2[n - 1]);
  R.values["square_rel_change"] = number(std::abs(g2[n - 1] - g2[n - 2]) / g2[n - 1]);
  R.values["fitted_exponent"] = number(fitted);
  R.values["predicted_exponent"] = kappa;
  R.values["in_window"] = in_window;
  R.values["square_divergent"] = divergent;
  R.check("sobolev_converged", sob_change < 0.05);
  R.check("square_classification", divergent == (kappa >= 0.0));
  if (in_window)
    R.check("exponent_within_15pct", std::abs(fitted - kappa) <= 0.15 * std::abs(kappa));
  else
    R.check("square_converged", std::abs(g2[n - 1] - g2[n - 2]) < 0.05 * g2[n - 1]);
  return R;
}

ScanReport algebra_window_scan(double gamma, double p, const std::vector<double>& nus,
                               const std::vector<double>& depths) {
  const NuWindow W = nu_window(gamma, p);
  check_depths(depths);
  if (nus.size() < 3) throw ParameterError("algebra_window_scan: need at least three nu values");
  for (std::size_t k = 1; k < nus.size(); ++k)
    if (!(nus[k] > nus[k - 1])) throw ParameterError("algebra_window_scan: nu values must increase");

  ScanReport R;
  R.name = "algebra_window_scan";
  R.params = {{"gamma", gamma}, {"p", p}, {"variant", variant_name(W.variant)}};
  const MeasureTag mu = MeasureTag::Mu(gamma);
  const BumpProfiles prof = BumpProfiles::canonical();
  const std::size_t m = nus.size(), n = depths.size();
  std::vector<double> lam1(m), lam2(m);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t v = 0; v < m; ++v) {
    std::vector<double> p1(n), p2(n);
    for (std::size_t d = 0; d < n; ++d) {
      const GridSpec g = truncated_grid(W.variant, depths[d]);
      const Field G = g_nu(nus[v], W.variant, g, prof);
      p1[d] = integrate(Field(g, G.values.abs().pow(p)), mu);
      p2[d] = integrate(Field(g, G.values.abs().pow(2.0 * p)), mu);
    }
    lam1[v] = increment_rate(depths, p1);
    lam2[v] = increment_rate(depths, p2);
  }

  R.columns = {"nu", "rate_g", "rate_square", "g_finite", "square_finite"};
  double step = 0.0;
  for (std::size_t v = 0; v < m; ++v) {
    R.rows.push_back({nus[v], lam1[v], lam2[v], double(lam1[v] < kFiniteRate), double(lam2[v] < kFiniteRate)});
    if (v > 0) step = std::max(step, nus[v] - nus[v - 1]);
  }
  // edge = the nu on the divergent side of the single flip
  auto edge = [&](const std::vector<double>& lam, double truth, const std::string& label) {
    int flips = 0;
    double est = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t v = 1; v < m; ++v) {
      const bool a = lam[v - 1] < kFiniteRate, b = lam[v] < kFiniteRate;
      if (a == b) continue;
      ++flips;
      est = a ? nus[v] : nus[v - 1];
    }
    R.values[label + "_edge"] = number(est);
    R.values[label + "_edge_expected"] = truth;
    R.check(label + "_single_flip", flips == 1);
    R.check(label + "_edge_within_step", flips == 1 && std::abs(est - truth) <= step * (1.0 + 1e-9));
  };
  edge(lam1, (1.0 - gamma) / p, "g");
  edge(lam2, (1.0 - gamma) / (2.0 * p), "square");
  R.values["nu_step"] = step;
  return R;
}

}  // namespace driftlab
