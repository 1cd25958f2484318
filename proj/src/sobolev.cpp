#include "driftlab/sobolev.hpp"

#include "driftlab/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace driftlab {

Json SobolevParams::to_json() const {
  return {{"p", number(p)}, {"alpha", alpha}, {"gamma", gamma}, {"c", shift()}};
}

std::string route_name(Route r) {
  switch (r) {
    case Route::spectral: return "spectral";
    case Route::integer: return "integer";
    case Route::square_function: return "square_function";
  }
  return "?";
}

Json NormReport::to_json() const {
  return {{"value", number(value)},
          {"route", route_name(route)},
          {"params", params.to_json()},
          {"lp_term", number(lp_term)},
          {"derivative_term", number(derivative_term)},
          {"truncation_mass", number(truncation_mass)}};
}

double presmoothing_time(const GridSpec& g) {
  const double h = std::max(g.hx(), g.hs());
  return 4.0 * h * h;
}

Field presmooth(const Field& f, double gamma) { return heat_apply(f, presmoothing_time(f.spec), gamma); }

Field frame_generator(const Field& f, double gamma, double shift) {
  const Field f0 = apply_field(f, FrameField::X0);
  const Field f00 = apply_field(f0, FrameField::X0);
  const Field f11 = apply_word(f, {FrameField::X1, FrameField::X1});
  return {f.spec, -f00.values - f11.values + gamma * f0.values + shift * f.values};
}

Field frac_power_apply(const Field& f, const SobolevParams& P) {
  if (!(P.alpha > 0.0) || P.alpha > 4.0) throw ParameterError("frac_power_apply: alpha must be in (0, 4]");
  const double c = P.shift();
  Field out;
  if (P.alpha > 2.0) {
    SobolevParams Q = P;
    Q.alpha = P.alpha - 2.0;
    out = frame_generator(frac_power_apply(f, Q), P.gamma, c);
  } else {
    const Field B = P.alpha == 2.0 ? f : bessel_apply(f, P.bessel(2.0 - P.alpha));
    out = frame_generator(B, P.gamma, c);
  }
  const MeasureTag mu = MeasureTag::Mu(P.gamma);
  const double in = lp_norm(f, 2.0, mu), o = lp_norm(out, 2.0, mu);
  if (!out.finite() || o > 1e3 * std::max(in, 1e-300)) {
    std::ostringstream os;
    os << "frac_power_apply: output norm " << o << " exceeds 1e3 times the input norm " << in
       << "; the input is not resolved at grid scale";
    throw ResolutionError(os.str());
  }
  return out;
}

NormReport sobolev_norm(const Field& f, const SobolevParams& P, Route route) {
  if (!(P.p >= 1.0)) throw ParameterError("sobolev_norm: p must be >= 1");
  if (P.alpha < 0.0) throw ParameterError("sobolev_norm: alpha must be >= 0");
  const MeasureTag mu = MeasureTag::Mu(P.gamma);
  NormReport R;
  R.route = route;
  R.params = P;
  R.lp_term = lp_norm(f, P.p, mu);
  switch (route) {
    case Route::spectral: {
      if (P.alpha > 0.0) {
        const Field g = frac_power_apply(f, P);
        R.derivative_term = lp_norm(g, P.p, mu);
        if (P.alpha < 2.0) R.truncation_mass = bessel_operator(f.spec, P.bessel(2.0 - P.alpha))->truncation_mass(f);
      }
      break;
    }
    case Route::integer: {
      const int k = static_cast<int>(std::lround(P.alpha));
      if (std::abs(P.alpha - k) > 1e-12 || k > 3)
        throw ParameterError("sobolev_norm: the integer route needs alpha in {0, 1, 2, 3}");
      for (const Word& w : words_up_to(k))
        if (!w.empty()) R.derivative_term += lp_norm(apply_word(f, w), P.p, mu);
      break;
    }
    case Route::square_function: {
      if (P.alpha >= 1.0) throw ParameterError("sobolev_norm: the square-function route needs alpha in [0, 1)");
      if (P.alpha > 0.0) R.derivative_term = lp_norm(square_function(f, P.alpha), P.p, mu);
      break;
    }
  }
  R.value = R.lp_term + R.derivative_term;
  return R;
}

// ---- ball sampling ---------------------------------------------------------

namespace {

using GL4 = boost::math::quadrature::gauss<double, 4>;

// composite Simpson weight of node k out of K (odd), in units of the step
double simpson_weight(int k, int K) {
  if (k == 0 || k == K - 1) return 1.0 / 3.0;
  return k % 2 ? 4.0 / 3.0 : 2.0 / 3.0;
}

// nodes and weights of the 4-point Gauss rule on [lo, hi]
void gl4(double lo, double hi, double* x, double* w) {
  const auto& ab = GL4::abscissa();
  const auto& wt = GL4::weights();
  const double m = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  int q = 0;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    if (ab[k] == 0.0) {
      x[q] = m;
      w[q++] = h * wt[k];
      continue;
    }
    x[q] = m - h * ab[k];
    w[q++] = h * wt[k];
    x[q] = m + h * ab[k];
    w[q++] = h * wt[k];
  }
}

// bilinear lookup at chart coordinates (X, S); sets inside
inline double bilinear(const Field& f, double X, double S, bool& inside) {
  const GridSpec& g = f.spec;
  const double u = (X - g.x_min) / g.hx(), w = (S - g.s_min) / g.hs();
  inside = u >= 0.0 && w >= 0.0 && u <= g.n_x - 1 && w <= g.n_s - 1;
  if (!inside) return 0.0;
  const int i = std::min(static_cast<int>(u), g.n_x - 2), j = std::min(static_cast<int>(w), g.n_s - 2);
  const double fu = u - i, fw = w - j;
  const auto& v = f.values;
  return (1 - fu) * (1 - fw) * v(i, j) + fu * (1 - fw) * v(i + 1, j) + (1 - fu) * fw * v(i, j + 1) +
         fu * fw * v(i + 1, j + 1);
}

}  // namespace

BallQuadrature ball_quadrature(double r, int n_r, int n_theta) {
  BallQuadrature Q;
  Q.radius = r;
  // n_r is rounded to panels of four Gauss points
  const int panels = std::max(1, n_r / 4);
  for (int p = 0; p < panels; ++p) {
    double x[4], w[4];
    gl4(r * p / panels, r * (p + 1) / panels, x, w);
    for (int q = 0; q < 4; ++q)
      for (int m = 0; m < n_theta; ++m) {
        const double th = 2.0 * std::numbers::pi * (m + 0.5) / n_theta;
        const GroupPoint z = polar_point(x[q], th);
        Q.z.push_back(z);
        Q.w.push_back(w[q] * std::sinh(x[q]) * z.a * 2.0 * std::numbers::pi / n_theta);
      }
  }
  return Q;
}

BallIntegral ball_integral(const Field& h, const GroupPoint& c, const BallQuadrature& Q, double gamma) {
  BallIntegral out;
  const double sc = c.s();
  for (std::size_t q = 0; q < Q.z.size(); ++q) {
    const GroupPoint& z = Q.z[q];
    const double S = sc + std::log(z.a);
    bool in;
    const double v = bilinear(h, c.x + c.a * z.x, S, in);
    if (!in) continue;
    const double w = Q.w[q] * std::exp(-gamma * S);
    out.integral += v * w;
    out.measure += w;
  }
  // d rho(cz) = delta(c)^{-1} d rho(z)
  out.integral *= c.a;
  out.measure *= c.a;
  return out;
}

std::vector<double> ball_radii(double R) {
  std::vector<double> r;
  for (int k = 0; k < 8; ++k) r.push_back(R * std::pow(1.0 / 16.0, k / 7.0));
  return r;
}

std::vector<SampledBall> ball_family(const GridSpec& g, double R) {
  const auto radii = ball_radii(R);
  std::vector<SampledBall> out;
  auto add_centre = [&](int ci, int cj) {
    std::vector<SampledBall> here;
    for (int k = 0; k < 8; ++k) here.push_back({ci, cj, k, {}});
    const double sc = g.s(cj), xc = g.xc(ci);
    for (int j = 0; j < g.n_s; ++j) {
      const double ds = g.s(j) - sc;
      if (std::abs(ds) > R) continue;
      const double room = 2.0 * std::exp(g.s(j) + sc) * (std::cosh(R) - std::cosh(ds));
      if (room < 0.0) continue;
      const double dxm = std::sqrt(room);
      const int i0 = std::max(0, static_cast<int>(std::floor((xc - dxm - g.x_min) / g.hx())));
      const int i1 = std::min(g.n_x - 1, static_cast<int>(std::ceil((xc + dxm - g.x_min) / g.hx())));
      for (int i = i0; i <= i1; ++i) {
        const double d = norm_xs((g.xc(i) - xc) * std::exp(-sc), ds);
        for (int k = 0; k < 8 && d <= radii[k]; ++k) here[k].members.push_back(i + g.n_x * j);
      }
    }
    for (auto& b : here) out.push_back(std::move(b));
  };
  for (int cj = 0; cj < g.n_s; cj += 2)
    for (int ci = 0; ci < g.n_x; ci += 2) add_centre(ci, cj);
  // where the x spacing exceeds R in group distance a node can miss every ball above;
  // such nodes get balls of their own
  std::vector<char> covered(static_cast<std::size_t>(g.n_x * g.n_s), 0);
  for (const auto& b : out)
    for (int idx : b.members) covered[static_cast<std::size_t>(idx)] = 1;
  for (int j = 0; j < g.n_s; ++j)
    for (int i = 0; i < g.n_x; ++i)
      if (!covered[static_cast<std::size_t>(i + g.n_x * j)]) add_centre(i, j);
  return out;
}

Field maximal_op(const Field& f, double R) {
  if (!(R > 0.0) || R > 1.0) throw ParameterError("maximal_op: need 0 < R <= 1");
  const GridSpec& g = f.spec;
  const auto radii = ball_radii(R);
  std::vector<BallQuadrature> Q;
  for (double r : radii) Q.push_back(ball_quadrature(r));
  const Field af(g, f.values.abs());
  Field M(g);
  const auto balls = ball_family(g, R);
  std::vector<double> avg(balls.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < balls.size(); ++b) {
    const auto& B = balls[b];
    const BallIntegral I = ball_integral(af, g.point(B.ci, B.cj), Q[static_cast<std::size_t>(B.k)], 0.0);
    avg[b] = I.measure > 0.0 ? I.integral / I.measure : 0.0;
  }
  for (std::size_t b = 0; b < balls.size(); ++b)
    for (int idx : balls[b].members) {
      double& m = M.values(idx % g.n_x, idx / g.n_x);
      m = std::max(m, avg[b]);
    }
  return M;
}

// ---- square function ---------------------------------------------------------

Field square_function(const Field& f, double alpha, double R) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("square_function: alpha must be in (0, 1)");
  if (!(R > 0.0) || R > 1.0) throw ParameterError("square_function: need 0 < R <= 1");
  const GridSpec& g = f.spec;
  constexpr int K = 25, n_theta = 32;
  const double u_min = std::min(R / 64.0, 0.25 * g.hs());
  std::vector<double> u(K), V(K);
  for (int k = 0; k < K; ++k) {
    u[static_cast<std::size_t>(k)] = u_min * std::pow(R / u_min, k / (K - 1.0));
    V[static_cast<std::size_t>(k)] = ball_volume(u[static_cast<std::size_t>(k)], MeasureTag::Rho());
  }
  // samples y^{-1} of each shell with drho(y) weights, stored as (x shift, s shift)
  struct Sample {
    double X, S, w;
  };
  std::vector<std::vector<Sample>> shells(K);
  for (int k = 0; k < K; ++k) {
    double x[4], w[4];
    gl4(k == 0 ? 0.0 : u[static_cast<std::size_t>(k - 1)], u[static_cast<std::size_t>(k)], x, w);
    for (int q = 0; q < 4; ++q)
      for (int m = 0; m < n_theta; ++m) {
        const GroupPoint y = polar_point(x[q], 2.0 * std::numbers::pi * (m + 0.5) / n_theta);
        const GroupPoint yi = inverse(y);
        shells[static_cast<std::size_t>(k)].push_back(
            {yi.x, std::log(yi.a), w[q] * std::sinh(x[q]) * y.a * 2.0 * std::numbers::pi / n_theta});
      }
  }
  const double dlog = std::log(R / u_min) / (K - 1);
  Field S(g);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.n_s; ++j) {
    const double sj = g.s(j), aj = std::exp(sj);
    for (int i = 0; i < g.n_x; ++i) {
      const double fx = f.values(i, j), xi = g.xc(i);
      double cum = 0.0, acc = 0.0, first = 0.0;
      for (int k = 0; k < K; ++k) {
        for (const Sample& smp : shells[static_cast<std::size_t>(k)]) {
          bool in;
          const double v = bilinear(f, xi + aj * smp.X, sj + smp.S, in);
          if (in) cum += std::abs(v - fx) * smp.w;
        }
        const double b = cum / (std::pow(u[static_cast<std::size_t>(k)], alpha) * V[static_cast<std::size_t>(k)]);
        if (k == 0) first = b;
        acc += simpson_weight(k, K) * b * b * dlog;
      }
      // below u_min the bracket scales like u^{1 - alpha}
      acc += first * first / (2.0 * (1.0 - alpha));
      S.values(i, j) = std::sqrt(acc);
    }
  }
  return S;
}

Field unitary_map(const Field& f, double p, double gamma, bool forward) {
  if (!(p > 1.0)) throw ParameterError("unitary_map: p must exceed 1");
  return times_exp_s(f, (forward ? -1.0 : 1.0) * gamma / p);
}

std::vector<Field> sample_family(const std::vector<FamilyMember>& fam, const GridSpec& g) {
  std::vector<Field> out;
  for (const auto& m : fam) out.push_back(sample(m.rule, g));
  return out;
}

// ---- scans -------------------------------------------------------------------

namespace {

double safe_ratio(double a, double b) { return b > 0.0 ? a / b : std::numeric_limits<double>::infinity(); }

bool stable(double ratio, double tol = 0.2) { return std::isfinite(ratio) && std::abs(ratio - 1.0) < tol; }

}  // namespace

ScanReport riesz_ratio_scan(const Word& word, const SobolevParams& P, const std::vector<FamilyMember>& fam,
                            const GridSpec& g) {
  ScanReport R;
  R.name = "riesz_ratio";
  R.params = P.to_json();
  R.params["word"] = word_name(word);
  const int m = static_cast<int>(word.size());
  if (m > 2) throw ParameterError("riesz_ratio_scan: |J| must be at most 2");
  const MeasureTag mu = MeasureTag::Mu(P.gamma);
  R.columns = {"level", "member", "ratio"};
  double best[2] = {0.0, 0.0};
  const GridSpec grids[2] = {g, g.refined()};
  for (int level = 0; level < 2; ++level) {
    const auto F = sample_family(fam, grids[level]);
    for (std::size_t q = 0; q < F.size(); ++q) {
      const Field B = m == 0 ? F[q] : bessel_apply(F[q], P.bessel(m));
      const double r = safe_ratio(lp_norm(apply_word(B, word), P.p, mu), lp_norm(F[q], P.p, mu));
      R.rows.push_back({double(level), double(q), r});
      best[level] = std::max(best[level], r);
    }
  }
  R.values["max_ratio"] = best[0];
  R.values["max_ratio_refined"] = best[1];
  R.refinement_ratio = safe_ratio(best[1], best[0]);
  R.check("finite", std::isfinite(best[0]) && std::isfinite(best[1]));
  R.check("refinement_stable", stable(R.refinement_ratio));
  return R;
}

ScanReport product_inequality_scan(const std::vector<std::pair<FamilyMember, FamilyMember>>& pairs,
                                   const SobolevParams& P, const ProductExponents& e, const GridSpec& g) {
  auto inv = [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; };
  if (std::abs(inv(P.p) - inv(e.p1) - inv(e.q1)) > 1e-12 || std::abs(inv(P.p) - inv(e.p2) - inv(e.q2)) > 1e-12)
    throw ParameterError("product_inequality_scan: need 1/p = 1/p1 + 1/q1 = 1/p2 + 1/q2");
  ScanReport R;
  R.name = "product_inequality";
  R.params = P.to_json();
  R.params["p1"] = number(e.p1);
  R.params["p2"] = number(e.p2);
  R.params["q1"] = number(e.q1);
  R.params["q2"] = number(e.q2);
  const MeasureTag mu = MeasureTag::Mu(P.gamma);
  const Route route = Route::spectral;
  auto norm_a = [&](const Field& h, double p) {
    SobolevParams Q = P;
    Q.p = p;
    return sobolev_norm(h, Q, route).value;
  };
  R.columns = {"level", "pair", "lhs", "rhs", "ratio"};
  double best[2] = {0.0, 0.0};
  const GridSpec grids[2] = {g, g.refined()};
  for (int level = 0; level < 2; ++level) {
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const Field f = sample(pairs[q].first.rule, grids[level]);
      const Field h = sample(pairs[q].second.rule, grids[level]);
      const Field fh(grids[level], f.values * h.values);
      const double lhs = norm_a(fh, P.p);
      const double rhs = lp_norm(f, e.p1, mu) * norm_a(h, e.q1) + norm_a(f, e.p2) * lp_norm(h, e.q2, mu);
      const double r = safe_ratio(lhs, rhs);
      R.rows.push_back({double(level), double(q), lhs, rhs, r});
      best[level] = std::max(best[level], r);
    }
  }
  R.values["max_ratio"] = best[0];
  R.values["max_ratio_refined"] = best[1];
  R.refinement_ratio = safe_ratio(best[1], best[0]);
  R.check("finite", std::isfinite(best[0]) && std::isfinite(best[1]));
  R.check("refinement_stable", stable(R.refinement_ratio));
  return R;
}

ScanReport interpolation_inequality_scan(const std::vector<FamilyMember>& fam, double alpha, double r,
                                         const InterpolationExponents& e, double gamma, const GridSpec& g) {
  auto inv = [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; };
  if (std::abs(alpha - (e.theta * e.eps + (1.0 - e.theta) * e.beta)) > 1e-12)
    throw ParameterError("interpolation_inequality_scan: need alpha = theta eps + (1 - theta) beta");
  if (std::abs(inv(r) - (e.theta * inv(e.p) + (1.0 - e.theta) * inv(e.q))) > 1e-12)
    throw ParameterError("interpolation_inequality_scan: need 1/r = theta/p + (1 - theta)/q");
  if (std::isinf(e.q) && e.beta != 0.0) throw ParameterError("interpolation_inequality_scan: q = inf needs beta = 0");
  ScanReport R;
  R.name = "interpolation_inequality";
  R.params = {{"alpha", alpha}, {"r", number(r)},   {"eps", e.eps}, {"beta", e.beta},
              {"theta", e.theta}, {"p", number(e.p)}, {"q", number(e.q)}, {"gamma", gamma}};
  auto N = [&](const Field& f, double p, double a) {
    return sobolev_norm(f, SobolevParams{p, a, gamma, std::nan("")}, Route::spectral).value;
  };
  R.columns = {"level", "member", "lhs", "rhs", "ratio"};
  double best[2] = {0.0, 0.0};
  const GridSpec grids[2] = {g, g.refined()};
  for (int level = 0; level < 2; ++level) {
    const auto F = sample_family(fam, grids[level]);
    for (std::size_t q = 0; q < F.size(); ++q) {
      const double lhs = N(F[q], r, alpha);
      const double rhs = std::pow(N(F[q], e.p, e.eps), e.theta) * std::pow(N(F[q], e.q, e.beta), 1.0 - e.theta);
      const double ratio = safe_ratio(lhs, rhs);
      R.rows.push_back({double(level), double(q), lhs, rhs, ratio});
      best[level] = std::max(best[level], ratio);
    }
  }
  R.values["max_ratio"] = best[0];
  R.values["max_ratio_refined"] = best[1];
  R.refinement_ratio = safe_ratio(best[1], best[0]);
  R.check("finite", std::isfinite(best[0]) && std::isfinite(best[1]));
  R.check("refinement_stable", stable(R.refinement_ratio));
  return R;
}

// ---- line ----------------------------------------------------------------------

namespace line {

LineField fourier_power(const LineField& f, double s, double c) {
  return fourier_multiplier(f, [=](double xi) { return std::pow(xi * xi + c, 0.5 * s); });
}

LineField frac_power_apply(const LineField& f, double alpha, double c) {
  if (!(alpha > 0.0) || alpha > 2.0) throw ParameterError("line::frac_power_apply: alpha must be in (0, 2]");
  const LineField B = alpha == 2.0 ? f : bessel_apply(f, 2.0 - alpha, c);
  return {f.grid, -derivative(B, 2).values + c * B.values};
}

double sobolev_norm_fourier(const LineField& f, double p, double alpha, double c) {
  if (alpha == 0.0) return lp_norm(f, p);
  return lp_norm(f, p) + lp_norm(fourier_power(f, alpha, c), p);
}

LineField square_function(const LineField& f, double alpha, double R) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("line::square_function: alpha must be in (0, 1)");
  const LineGrid& g = f.grid;
  constexpr int K = 25;
  const double u_min = std::min(R / 64.0, 0.25 * g.h());
  std::vector<double> u(K);
  for (int k = 0; k < K; ++k) u[static_cast<std::size_t>(k)] = u_min * std::pow(R / u_min, k / (K - 1.0));
  const double dlog = std::log(R / u_min) / (K - 1);
  // samples off the interval count as no change
  auto diff = [&](double X, double fx) {
    const double q = (X - g.x_min) / g.h();
    if (!(q >= 0.0 && q <= g.n - 1)) return 0.0;
    const int i = std::min(static_cast<int>(q), g.n - 2);
    const double t = q - i;
    return std::abs((1 - t) * f.values(i) + t * f.values(i + 1) - fx);
  };
  LineField S(g);
  for (int i = 0; i < g.n; ++i) {
    const double x = g.x(i), fx = f.values(i);
    double cum = 0.0, acc = 0.0, first = 0.0;
    for (int k = 0; k < K; ++k) {
      double xs[4], ws[4];
      gl4(k == 0 ? 0.0 : u[static_cast<std::size_t>(k - 1)], u[static_cast<std::size_t>(k)], xs, ws);
      for (int q = 0; q < 4; ++q) cum += (diff(x - xs[q], fx) + diff(x + xs[q], fx)) * ws[q];
      const double b = cum / (std::pow(u[static_cast<std::size_t>(k)], alpha) * 2.0 * u[static_cast<std::size_t>(k)]);
      if (k == 0) first = b;
      acc += simpson_weight(k, K) * b * b * dlog;
    }
    acc += first * first / (2.0 * (1.0 - alpha));
    S.values(i) = std::sqrt(acc);
  }
  return S;
}

ScanReport riesz_ratio_scan(int m, double p, double c, const std::vector<LineMember>& fam, const LineGrid& g) {
  if (m < 1 || m > 2) throw ParameterError("line::riesz_ratio_scan: m must be 1 or 2");
  ScanReport R;
  R.name = "riesz_ratio_line";
  R.params = {{"m", m}, {"p", number(p)}, {"c", c}};
  R.columns = {"level", "member", "ratio"};
  double best[2] = {0.0, 0.0};
  const LineGrid grids[2] = {g, g.refined()};
  for (int level = 0; level < 2; ++level)
    for (std::size_t q = 0; q < fam.size(); ++q) {
      const LineField f = sample(fam[q].rule, grids[level]);
      const double r = safe_ratio(lp_norm(derivative(bessel_apply(f, m, c), m), p), lp_norm(f, p));
      R.rows.push_back({double(level), double(q), r});
      best[level] = std::max(best[level], r);
    }
  R.values["max_ratio"] = best[0];
  R.values["max_ratio_refined"] = best[1];
  R.refinement_ratio = safe_ratio(best[1], best[0]);
  R.check("finite", std::isfinite(best[0]) && std::isfinite(best[1]));
  R.check("refinement_stable", stable(R.refinement_ratio));
  return R;
}

}  // namespace line

}  // namespace driftlab
