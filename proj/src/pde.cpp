#include "driftlab/pde.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/heat.hpp"
#include "driftlab/sobolev.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

namespace driftlab {

using line::CLineField;
using line::LineField;
using line::LineGrid;

// ---- nonlinearities and admissibility ------------------------------------------

Nonlinearity Nonlinearity::zero() { return {"zero", [](double) { return 0.0; }, [](cplx) { return cplx(0.0); }}; }

Nonlinearity Nonlinearity::power(int k) {
  return {"u^" + std::to_string(k), [k](double u) { return std::pow(u, k); }, [k](cplx z) { return std::pow(z, k); }};
}

Nonlinearity Nonlinearity::cubic_nls() {
  return {"|u|^2 u", [](double u) { return u * u * u; }, [](cplx z) { return std::norm(z) * z; }};
}

Nonlinearity Nonlinearity::quintic_nls() {
  return {"|u|^4 u", [](double u) { return std::pow(u, 5); }, [](cplx z) { return std::norm(z) * std::norm(z) * z; }};
}

Nonlinearity Nonlinearity::affine_square(double c) {
  return {"u^2 + c", [c](double u) { return u * u + c; }, [c](cplx z) { return z * z + c; }};
}

Nonlinearity Nonlinearity::identity_map() { return {"u", [](double u) { return u; }, [](cplx z) { return z; }}; }

Json AdmissibilityReport::to_json() const {
  Json d = Json::array();
  for (double v : derivatives) d.push_back(number(v));
  return {{"admissible", admissible}, {"order", order}, {"derivatives", d}};
}

namespace {

constexpr double kAdmissibleTol = 1e-6;

double binomial(int n, int k) {
  double b = 1.0;
  for (int j = 1; j <= k; ++j) b = b * (n - k + j) / j;
  return b;
}

// d^{k1}_x d^{k2}_y G(0,0) by central differences at h, h/2, h/4, h/8 and Richardson in h^2
double mixed_derivative(const std::function<double(double, double)>& G, int k1, int k2) {
  auto central = [&](double h) {
    double sum = 0.0;
    for (int j = 0; j <= k1; ++j)
      for (int l = 0; l <= k2; ++l) {
        const double c = ((j + l) % 2 ? -1.0 : 1.0) * binomial(k1, j) * binomial(k2, l);
        sum += c * G((0.5 * k1 - j) * h, (0.5 * k2 - l) * h);
      }
    return sum / std::pow(h, k1 + k2);
  };
  double T[4][4];
  for (int m = 0; m < 4; ++m) {
    T[m][0] = central(0.1 / std::pow(2.0, m));
    for (int q = 1; q <= m; ++q) T[m][q] = T[m][q - 1] + (T[m][q - 1] - T[m - 1][q - 1]) / (std::pow(4.0, q) - 1.0);
  }
  return T[3][3];
}

AdmissibilityReport check_components(const std::vector<std::function<double(double, double)>>& comps, double alpha) {
  if (!(alpha >= 0.0)) throw ParameterError("admissibility_check: alpha must be nonnegative");
  AdmissibilityReport A;
  A.order = static_cast<int>(std::floor(alpha + 1e-12));
  A.admissible = true;
  for (int k = 0; k <= A.order; ++k) {
    double worst = 0.0;
    for (const auto& G : comps)
      for (int k1 = 0; k1 <= k; ++k1) worst = std::max(worst, std::abs(mixed_derivative(G, k1, k - k1)));
    A.derivatives.push_back(worst);
    if (!(worst < kAdmissibleTol)) A.admissible = false;
  }
  return A;
}

}  // namespace

AdmissibilityReport admissibility_check(const Nonlinearity& F, double alpha) {
  if (F.Fc) {
    auto re = [&](double x, double y) { return F.Fc(cplx(x, y)).real(); };
    auto im = [&](double x, double y) { return F.Fc(cplx(x, y)).imag(); };
    return check_components({re, im}, alpha);
  }
  if (!F.F) throw ParameterError("admissibility_check: empty nonlinearity");
  return check_components({[&](double x, double) { return F.F(x); }}, alpha);
}

AdmissibilityReport admissibility_check(const std::function<double(double, double)>& G, double alpha) {
  return check_components({G}, alpha);
}

// ---- the space Y -----------------------------------------------------------------

Json YSpace::to_json() const {
  Json j = {{"group", group == GroupKind::AxB ? "axb" : "line"}, {"p", p}, {"alpha", alpha}, {"gamma", gamma}};
  if (group == GroupKind::AxB)
    j["grid"] = Json::parse(grid.to_json());
  else
    j["grid"] = {{"x_min", line_grid.x_min}, {"x_max", line_grid.x_max}, {"n", line_grid.n}};
  return j;
}

namespace {

void check_alpha(int alpha) {
  if (alpha < 0 || alpha > 2) throw ParameterError("Y norms use the integer route: alpha must be 0, 1 or 2");
}

template <typename S>
double y_norm_axb(const GridFunction<S>& u, const YSpace& Y) {
  check_alpha(Y.alpha);
  const MeasureTag mu = MeasureTag::Mu(Y.gamma);
  double n = u.values.abs().maxCoeff();
  for (const Word& w : words_up_to(Y.alpha)) n += lp_norm(w.empty() ? u : apply_word(u, w), Y.p, mu);
  return n;
}

template <typename S>
double y_norm_line(const line::LineFunction<S>& u, const YSpace& Y) {
  check_alpha(Y.alpha);
  double n = u.values.abs().maxCoeff() + line::lp_norm(u, Y.p);
  for (int k = 1; k <= Y.alpha; ++k) n += line::lp_norm(line::derivative(u, k), Y.p);
  return n;
}

}  // namespace

double y_norm(const Field& u, const YSpace& Y) { return y_norm_axb(u, Y); }
double y_norm(const CField& u, const YSpace& Y) { return y_norm_axb(u, Y); }
double y_norm(const LineField& u, const YSpace& Y) { return y_norm_line(u, Y); }
double y_norm(const CLineField& u, const YSpace& Y) { return y_norm_line(u, Y); }

// ---- field plumbing shared by both groups -------------------------------------------

namespace {

template <typename V>
struct Traits;

template <typename S>
struct Traits<GridFunction<S>> {
  using Scalar = S;
  static GridFunction<S> zero_like(const GridFunction<S>& f) { return GridFunction<S>(f.spec); }
  static auto& vals(GridFunction<S>& f) { return f.values; }
  static const auto& vals(const GridFunction<S>& f) { return f.values; }
};

template <typename S>
struct Traits<line::LineFunction<S>> {
  using Scalar = S;
  static line::LineFunction<S> zero_like(const line::LineFunction<S>& f) { return line::LineFunction<S>(f.grid); }
  static auto& vals(line::LineFunction<S>& f) { return f.values; }
  static const auto& vals(const line::LineFunction<S>& f) { return f.values; }
};

template <typename V>
V apply_rule(const V& u, const Nonlinearity& F) {
  using S = typename Traits<V>::Scalar;
  V out = u;
  if constexpr (std::is_same_v<S, double>) {
    if (!F.F) throw ParameterError("nonlinearity has no real rule");
    out.values = u.values.unaryExpr([&](double x) { return F.F(x); });
  } else {
    if (!F.Fc) throw ParameterError("nonlinearity has no complex rule");
    out.values = u.values.unaryExpr([&](cplx z) { return F.Fc(z); });
  }
  return out;
}

template <typename V>
V lin_comb(const V& a, typename Traits<V>::Scalar ca, const V& b, typename Traits<V>::Scalar cb) {
  V out = a;
  out.values = ca * a.values + cb * b.values;
  return out;
}

// seeded shapes for the Lipschitz pairs
struct Shape {
  double x0, s0, w;
  double phase;
  double operator()(double x, double s) const {
    return std::exp(-((x - x0) * (x - x0) + (s - s0) * (s - s0)) / (2.0 * w * w));
  }
};

Shape draw_shape(SeededStream& rng, bool on_line) {
  Shape sh;
  sh.x0 = on_line ? rng.uniform(-2.0, 2.0) : rng.uniform(-1.0, 1.0);
  sh.s0 = on_line ? 0.0 : rng.uniform(-0.8, 0.8);
  sh.w = on_line ? rng.uniform(0.3, 0.8) : rng.uniform(0.25, 0.5);
  sh.phase = rng.uniform(0.0, 2.0 * M_PI);
  return sh;
}

template <typename V>
V sample_shape(const Shape& sh, const YSpace& Y, const GridSpec& g, const LineGrid& lg) {
  using S = typename Traits<V>::Scalar;
  S ph = S(1.0);
  if constexpr (!std::is_same_v<S, double>) ph = std::polar(1.0, sh.phase);
  if constexpr (std::is_same_v<V, Field> || std::is_same_v<V, CField>) {
    V f(g);
    for (int j = 0; j < g.n_s; ++j)
      for (int i = 0; i < g.n_x; ++i) f.values(i, j) = ph * sh(g.point(i, j).x, g.s(j));
    return f;
  } else {
    V f(lg);
    for (int i = 0; i < lg.n; ++i) f.values(i) = ph * sh(lg.x(i), 0.0);
    return f;
  }
  (void)Y;
}

template <typename V>
double lipschitz_sup(const Nonlinearity& F, double R, const YSpace& Y, const GridSpec& g, const LineGrid& lg,
                     int samples, std::uint64_t seed, int& skipped) {
  SeededStream rng(seed);
  const bool on_line = Y.group == GroupKind::Line;
  double sup = 0.0;
  skipped = 0;
  for (int k = 0; k < samples; ++k) {
    V A = sample_shape<V>(draw_shape(rng, on_line), Y, g, lg);
    V B = sample_shape<V>(draw_shape(rng, on_line), Y, g, lg);
    const double theta = rng.uniform(0.5, 1.0), delta = rng.uniform(0.02, 0.4);
    A.values *= R * theta / y_norm(A, Y);
    B.values *= R * delta / y_norm(B, Y);
    V u = A, v = lin_comb(A, 1.0, B, 1.0);
    const double nv = y_norm(v, Y);
    if (nv > R) v.values *= R / nv;
    const double d = y_norm(lin_comb(u, 1.0, v, -1.0), Y);
    if (d < 1e-10) {
      ++skipped;
      continue;
    }
    sup = std::max(sup, y_norm(lin_comb(apply_rule(u, F), 1.0, apply_rule(v, F), -1.0), Y) / d);
  }
  return sup;
}

}  // namespace

Json LipschitzReport::to_json() const {
  return {{"c", number(c)},
          {"empirical", number(empirical)},
          {"empirical_refined", number(empirical_refined)},
          {"pairs", pairs},
          {"skipped", skipped}};
}

LipschitzReport lipschitz_estimate(const Nonlinearity& F, double R, const YSpace& Y, bool complex_data, int samples,
                                   std::uint64_t seed) {
  if (!(R > 0.0)) throw ParameterError("lipschitz_estimate: R must be positive");
  if (samples < 1) throw ParameterError("lipschitz_estimate: need at least one pair");
  check_alpha(Y.alpha);
  LipschitzReport L;
  L.pairs = samples;
  int sk = 0;
  auto run = [&](const GridSpec& g, const LineGrid& lg) {
    if (Y.group == GroupKind::AxB)
      return complex_data ? lipschitz_sup<CField>(F, R, Y, g, lg, samples, seed, sk)
                          : lipschitz_sup<Field>(F, R, Y, g, lg, samples, seed, sk);
    return complex_data ? lipschitz_sup<CLineField>(F, R, Y, g, lg, samples, seed, sk)
                        : lipschitz_sup<LineField>(F, R, Y, g, lg, samples, seed, sk);
  };
  L.empirical = run(Y.grid, Y.line_grid);
  L.skipped = sk;
  L.empirical_refined = run(Y.grid.refined(), Y.line_grid.refined());
  if (L.empirical_refined > 1.25 * L.empirical + 1e-300)
    throw ScientificFailure("lipschitz_estimate: the ratio grows under refinement (" + std::to_string(L.empirical) +
                            " -> " + std::to_string(L.empirical_refined) + ")");
  L.c = 2.0 * std::max(L.empirical, L.empirical_refined);
  return L;
}

// ---- problems and trajectories --------------------------------------------------------

std::string pde_kind_name(PdeKind k) { return k == PdeKind::heat ? "heat" : "schrodinger"; }

Json CauchyProblem::to_json() const {
  return {{"kind", pde_kind_name(kind)}, {"space", space.to_json()}, {"tau", tau},
          {"n_t", n_t},                  {"R", number(R)},            {"max_iterations", max_iterations},
          {"tolerance", tolerance}};
}

Field SolutionTrajectory::real_field(std::size_t k) const { return {grid, states.at(k).real()}; }
CField SolutionTrajectory::complex_field(std::size_t k) const { return {grid, states.at(k)}; }
LineField SolutionTrajectory::real_line(std::size_t k) const { return {line_grid, states.at(k).col(0).real()}; }
CLineField SolutionTrajectory::complex_line(std::size_t k) const { return {line_grid, states.at(k).col(0)}; }

Json SolutionTrajectory::to_json() const {
  Json j;
  j["kind"] = pde_kind_name(kind);
  j["group"] = group == GroupKind::AxB ? "axb" : "line";
  Json t = Json::array(), yn = Json::array(), ms = Json::array(), h = Json::array();
  for (double v : times) t.push_back(v);
  for (double v : y_norms) yn.push_back(number(v));
  for (double v : masses) ms.push_back(number(v));
  for (double v : history) h.push_back(number(v));
  j["times"] = t;
  j["y_norms"] = yn;
  j["masses"] = ms;
  j["iteration_history"] = h;
  j["iterations"] = history.size();
  j["converged"] = converged;
  j["R"] = number(R);
  j["lipschitz"] = lipschitz.to_json();
  j["c_tau"] = number(c_tau);
  j["max_contraction"] = number(max_contraction);
  j["bound_constant"] = number(bound_constant);
  j["residual"] = number(residual);
  j["residual_tolerance"] = number(residual_tolerance);
  j["min_value"] = number(min_value);
  return j;
}

namespace {

// ---- Crank-Nicolson ---------------------------------------------------------------

using SpMat = Eigen::SparseMatrix<cplx>;

SpMat generator_matrix(const GridSpec& g, double gamma) {
  const int nx = g.n_x, ns = g.n_s;
  const double hx2 = g.hx() * g.hx(), hs2 = g.hs() * g.hs();
  const double up = std::exp(-0.5 * gamma * g.hs()) / hs2, down = std::exp(0.5 * gamma * g.hs()) / hs2;
  std::vector<Eigen::Triplet<cplx>> T;
  T.reserve(static_cast<std::size_t>(5 * nx * ns));
  for (int j = 0; j < ns; ++j) {
    const double ex = std::exp(2.0 * g.s(j)) / hx2;
    for (int i = 0; i < nx; ++i) {
      const int c = i + nx * j;
      T.emplace_back(c, c, up + down + 2.0 * ex);
      if (j + 1 < ns) T.emplace_back(c, c + nx, -up);
      if (j > 0) T.emplace_back(c, c - nx, -down);
      if (i + 1 < nx) T.emplace_back(c, c + 1, -ex);
      if (i > 0) T.emplace_back(c, c - 1, -ex);
    }
  }
  SpMat A(nx * ns, nx * ns);
  A.setFromTriplets(T.begin(), T.end());
  return A;
}

SpMat generator_matrix(const LineGrid& g) {
  const int n = g.n;
  const double h2 = g.h() * g.h();
  std::vector<Eigen::Triplet<cplx>> T;
  for (int i = 0; i < n; ++i) {
    T.emplace_back(i, i, 2.0 / h2);
    if (i + 1 < n) T.emplace_back(i, i + 1, -1.0 / h2);
    if (i > 0) T.emplace_back(i, i - 1, -1.0 / h2);
  }
  SpMat A(n, n);
  A.setFromTriplets(T.begin(), T.end());
  return A;
}

struct CrankNicolson {
  SpMat plus;
  Eigen::SparseLU<SpMat> lu;
};

// factorisations keyed by (grid description, dt)
std::shared_ptr<const CrankNicolson> cn_factor(const std::string& key, const SpMat& A, double dt) {
  static std::mutex m;
  static std::map<std::pair<std::string, double>, std::shared_ptr<CrankNicolson>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find({key, dt});
  if (it != cache.end()) return it->second;
  auto cn = std::make_shared<CrankNicolson>();
  SpMat I(A.rows(), A.cols());
  I.setIdentity();
  const cplx k(0.0, 0.5 * dt);
  cn->plus = I + k * A;
  SpMat minus = I - k * A;
  cn->lu.compute(minus);
  if (cn->lu.info() != Eigen::Success) throw ScientificFailure("Crank-Nicolson factorisation failed");
  if (cache.size() > 32) cache.clear();
  cache[{key, dt}] = cn;
  return cn;
}

Eigen::VectorXcd cn_steps(const std::shared_ptr<const CrankNicolson>& cn, Eigen::VectorXcd v, int steps) {
  for (int k = 0; k < steps; ++k) v = cn->lu.solve(cn->plus * v);
  return v;
}

std::string grid_key(const GridSpec& g) { return "axb" + g.to_json(); }
std::string grid_key(const LineGrid& g) {
  std::ostringstream o;
  o.precision(17);
  o << "line" << g.x_min << ',' << g.x_max << ',' << g.n;
  return o.str();
}

}  // namespace

CField schrodinger_flow(const CField& u, double dt, int steps) {
  const auto cn = cn_factor(grid_key(u.spec), generator_matrix(u.spec, 1.0), dt);
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(u.values.data(), u.values.size());
  v = cn_steps(cn, v, steps);
  CField out(u.spec);
  out.values = Eigen::Map<Eigen::ArrayXXcd>(v.data(), u.spec.n_x, u.spec.n_s);
  return out;
}

CLineField schrodinger_flow(const CLineField& u, double dt, int steps) {
  const auto cn = cn_factor(grid_key(u.grid), generator_matrix(u.grid), dt);
  CLineField out(u.grid);
  out.values = cn_steps(cn, u.values.matrix(), steps).array();
  return out;
}

// Zero Dirichlet data sit on a ghost layer one cell outside the rectangle; the trapezoid rule
// on the enlarged rectangle gives every node the full cell weight.
template <typename S>
double dirichlet_l2(const GridFunction<S>& u, double gamma) {
  const GridSpec& g = u.spec;
  double s = 0.0;
  for (int j = 0; j < g.n_s; ++j) {
    double row = 0.0;
    for (int i = 0; i < g.n_x; ++i) row += std::norm(u.values(i, j));
    s += std::exp(-gamma * g.s(j)) * row;
  }
  return std::sqrt(s * g.hx() * g.hs());
}

template <typename S>
double dirichlet_l2(const line::LineFunction<S>& u) {
  return std::sqrt(u.values.abs2().sum() * u.grid.h());
}

template double dirichlet_l2(const Field&, double);
template double dirichlet_l2(const CField&, double);
template double dirichlet_l2(const LineField&);
template double dirichlet_l2(const CLineField&);

namespace {

template <typename V>
double mass(const V& u, double gamma) {
  if constexpr (std::is_same_v<V, Field> || std::is_same_v<V, CField>)
    return dirichlet_l2(u, gamma);
  else
    return dirichlet_l2(u);
}

// ---- generic Picard engine -------------------------------------------------------------

template <typename V>
struct Engine {
  const CauchyProblem& P;
  const Nonlinearity& F;
  double dt;
  int N;

  double norm(const V& v) const { return y_norm(v, P.space); }
};

template <typename V>
Eigen::ArrayXXcd to_state(const V& v) {
  if constexpr (std::is_same_v<V, Field> || std::is_same_v<V, CField>)
    return v.values.template cast<cplx>();
  else
    return Eigen::ArrayXXcd(v.values.template cast<cplx>());
}

template <typename V>
V generator(const V& u, double gamma) {
  if constexpr (std::is_same_v<V, Field> || std::is_same_v<V, CField>)
    return generator_apply(u, gamma);
  else
    return line::generator_apply(u);
}

template <typename V>
double interior_l2(const V& r, double gamma) {
  if constexpr (std::is_same_v<V, Field> || std::is_same_v<V, CField>) {
    const GridSpec& g = r.spec;
    const Eigen::ArrayXXd w = quadrature_weights(g, MeasureTag::Mu(gamma));
    const int mx = g.n_x / 8, ms = g.n_s / 8;
    double s = 0.0;
    for (int j = ms; j < g.n_s - ms; ++j)
      for (int i = mx; i < g.n_x - mx; ++i) s += w(i, j) * std::norm(r.values(i, j));
    return std::sqrt(s);
  } else {
    const LineGrid& g = r.grid;
    const int m = g.n / 8;
    double s = 0.0;
    for (int i = m; i < g.n - m; ++i) s += g.h() * std::norm(r.values(i));
    return std::sqrt(s);
  }
}


template <typename V>
double spacing(const V& u) {
  if constexpr (std::is_same_v<V, Field> || std::is_same_v<V, CField>)
    return std::max(u.spec.hx(), u.spec.hs());
  else
    return u.grid.h();
}

// duhamel(Fs) returns the Duhamel integrals at every time; `coef` multiplies them
template <typename V, typename Duhamel>
SolutionTrajectory run_picard(const CauchyProblem& P, const Nonlinearity& F, const std::vector<V>& lin,
                              Duhamel duhamel, typename Traits<V>::Scalar coef, double R, const LipschitzReport& L) {
  using S = typename Traits<V>::Scalar;
  const int N = P.n_t;
  const double dt = P.tau / N;
  SolutionTrajectory T;
  T.kind = P.kind;
  T.group = P.space.group;
  T.grid = P.space.grid;
  T.line_grid = P.space.line_grid;
  T.R = R;
  T.lipschitz = L;
  T.c_tau = L.c * P.tau;
  for (int n = 0; n <= N; ++n) T.times.push_back(n * dt);

  std::vector<V> u = lin;
  for (int m = 0; m < P.max_iterations; ++m) {
    std::vector<V> Fs;
    for (const V& v : u) Fs.push_back(apply_rule(v, F));
    const std::vector<V> D = duhamel(Fs);
    double diff = 0.0;
    std::vector<V> next(static_cast<std::size_t>(N + 1));
#pragma omp parallel for schedule(dynamic) reduction(max : diff)
    for (int n = 0; n <= N; ++n) {
      next[n] = lin_comb(lin[n], S(1.0), D[n], coef);
      diff = std::max(diff, y_norm(lin_comb(next[n], S(1.0), u[n], S(-1.0)), P.space));
    }
    u = std::move(next);
    T.history.push_back(diff);
    if (diff < P.tolerance) {
      T.converged = true;
      break;
    }
  }

  const double n0 = y_norm(u[0], P.space);
  T.min_value = INFINITY;
  for (const V& v : u) {
    T.states.push_back(to_state(v));
    T.y_norms.push_back(y_norm(v, P.space));
    T.masses.push_back(mass(v, P.space.gamma));
    T.bound_constant = std::max(T.bound_constant, n0 > 0.0 ? T.y_norms.back() / n0 : 0.0);
    if constexpr (std::is_same_v<S, double>)
      T.min_value = std::min(T.min_value, v.values.minCoeff());
    else
      T.min_value = std::min(T.min_value, v.values.real().minCoeff());
  }
  // contraction: ratios of successive differences after the second iterate, above round-off
  const double floor = 1e-13 * std::max(1.0, n0);
  for (std::size_t m = 2; m < T.history.size(); ++m)
    if (T.history[m - 1] > floor) T.max_contraction = std::max(T.max_contraction, T.history[m] / T.history[m - 1]);

  // residual of the equation at interior times and nodes
  const double gamma = P.space.gamma;
  for (int n = 1; n < N; ++n) {
    V r = lin_comb(u[n + 1], S(1.0), u[n - 1], S(-1.0));
    if constexpr (std::is_same_v<S, double>)
      r.values /= 2.0 * dt;
    else
      r.values *= cplx(0.0, 1.0 / (2.0 * dt));
    r.values += generator(u[n], gamma).values - apply_rule(u[n], F).values;
    T.residual = std::max(T.residual, interior_l2(r, gamma));
  }
  double ref = 0.0;
  V g = u[0];
  for (int k = 1; k <= 2; ++k) {
    g = generator(g, gamma);
    ref += interior_l2(g, gamma);
  }
  const double h = spacing(u[0]);
  T.residual_tolerance = 10.0 * (h * h + dt * dt) * ref;
  return T;
}

void check_problem(const CauchyProblem& P) {
  if (!(P.tau > 0.0)) throw ParameterError("Cauchy problem: tau must be positive");
  if (P.n_t < 2) throw ParameterError("Cauchy problem: need at least two time steps");
  if (!P.u0) throw ParameterError("Cauchy problem: missing initial data");
  check_alpha(P.space.alpha);
  if (!(P.space.p >= 1.0)) throw ParameterError("Cauchy problem: p must be at least 1");
}

// admissibility, the data bound and the contraction window
template <typename V>
std::pair<double, LipschitzReport> certify_window(const CauchyProblem& P, const Nonlinearity& F, const V& u0,
                                                  bool complex_data) {
  const AdmissibilityReport A = admissibility_check(F, P.space.alpha + 1.0);
  if (!A.admissible)
    throw ParameterError("nonlinearity " + F.name + " is not " + std::to_string(P.space.alpha + 1) + "-admissible");
  const double n0 = y_norm(u0, P.space);
  const double R = std::isnan(P.R) ? 2.0 * n0 : P.R;
  if (n0 > 0.5 * R * (1.0 + 1e-12)) throw ParameterError("Cauchy problem: ||u0||_Y exceeds R/2");
  LipschitzReport L;
  if (R > 0.0) L = lipschitz_estimate(F, R, P.space, complex_data);
  const double ct = L.c * P.tau;
  if (ct > 0.5)
    throw WindowRefusal("contraction window not certified: c(R) tau = " + std::to_string(ct) + " > 1/2", ct);
  return {R, L};
}

template <typename V>
V sample_u0(const CauchyProblem& P) {
  if constexpr (std::is_same_v<V, Field>)
    return sample(P.u0, P.space.grid);
  else if constexpr (std::is_same_v<V, CField>) {
    const Field f = sample(P.u0, P.space.grid);
    return CField(f.spec, f.values.cast<cplx>());
  } else if constexpr (std::is_same_v<V, LineField>)
    return line::sample([&](double x) { return P.u0(GroupPoint{x, 1.0}); }, P.space.line_grid);
  else {
    const LineField f = line::sample([&](double x) { return P.u0(GroupPoint{x, 1.0}); }, P.space.line_grid);
    return CLineField(f.grid, f.values.cast<cplx>());
  }
}

template <typename V>
V heat_lag(const V& f, double t, double gamma) {
  if (t == 0.0) return f;
  if constexpr (std::is_same_v<V, Field>)
    return heat_apply(f, t, gamma);
  else
    return line::heat_apply(f, t);
}

template <typename V>
SolutionTrajectory heat_impl(const CauchyProblem& P, const Nonlinearity& F) {
  const V u0 = sample_u0<V>(P);
  const auto [R, L] = certify_window(P, F, u0, false);
  const int N = P.n_t;
  const double dt = P.tau / N, gamma = P.space.gamma;
  std::vector<V> lin(static_cast<std::size_t>(N + 1));
#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n <= N; ++n) lin[n] = heat_lag(u0, n * dt, gamma);
  // composite trapezoid: D_n = dt sum_k w_k e^{-(t_n - t_k) Delta} F_k, lags applied directly
  auto duhamel = [&](const std::vector<V>& Fs) {
    std::vector<V> D(static_cast<std::size_t>(N + 1), Traits<V>::zero_like(u0));
    const bool zero = std::all_of(Fs.begin(), Fs.end(), [](const V& f) { return f.values.abs().maxCoeff() == 0.0; });
    if (zero) return D;
#pragma omp parallel for schedule(dynamic)
    for (int n = 1; n <= N; ++n)
      for (int k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 0.5 * dt : dt;
        D[n].values += w * heat_lag(Fs[k], (n - k) * dt, gamma).values;
      }
    return D;
  };
  return run_picard<V>(P, F, lin, duhamel, 1.0, R, L);
}

template <typename V>
SolutionTrajectory schrodinger_impl(const CauchyProblem& P, const Nonlinearity& F) {
  const V u0 = sample_u0<V>(P);
  const auto [R, L] = certify_window(P, F, u0, true);
  const int N = P.n_t;
  const double dt = P.tau / N;
  std::vector<V> lin{u0};
  for (int n = 1; n <= N; ++n) lin.push_back(schrodinger_flow(lin.back(), dt, 1));
  // the Crank-Nicolson powers form an exact semigroup, so the composite trapezoid sum
  // obeys D_n = U (D_{n-1} + dt/2 F_{n-1}) + dt/2 F_n
  auto duhamel = [&](const std::vector<V>& Fs) {
    std::vector<V> D{Traits<V>::zero_like(u0)};
    for (int n = 1; n <= N; ++n) {
      V step = schrodinger_flow(lin_comb(D.back(), cplx(1.0), Fs[n - 1], cplx(0.5 * dt)), dt, 1);
      step.values += 0.5 * dt * Fs[n].values;
      D.push_back(std::move(step));
    }
    return D;
  };
  return run_picard<V>(P, F, lin, duhamel, cplx(0.0, -1.0), R, L);
}

}  // namespace

SolutionTrajectory picard_heat(const CauchyProblem& P, const Nonlinearity& F) {
  check_problem(P);
  if (P.kind != PdeKind::heat) throw ParameterError("picard_heat: not a heat problem");
  if (P.space.group == GroupKind::AxB) return heat_impl<Field>(P, F);
  if (P.space.gamma != 0.0) throw ParameterError("picard_heat: the line has no drift, gamma must be 0");
  return heat_impl<LineField>(P, F);
}

SolutionTrajectory picard_schrodinger(const CauchyProblem& P, const Nonlinearity& F) {
  check_problem(P);
  if (P.kind != PdeKind::schrodinger) throw ParameterError("picard_schrodinger: not a Schrodinger problem");
  if (P.space.p != 2.0) throw ParameterError("picard_schrodinger: needs p = 2");
  const int d = P.space.group == GroupKind::AxB ? 2 : 1;
  if (!(P.space.alpha > d / 2.0)) throw ParameterError("picard_schrodinger: needs alpha > d/2");
  if (P.space.group == GroupKind::AxB) {
    if (P.space.gamma != 1.0) throw ParameterError("picard_schrodinger: needs gamma = 1 (mu = lambda)");
    return schrodinger_impl<CField>(P, F);
  }
  if (P.space.gamma != 0.0) throw ParameterError("picard_schrodinger: the line has no drift, gamma must be 0");
  return schrodinger_impl<CLineField>(P, F);
}

// ---- composition inequality ------------------------------------------------------------

ScanReport composition_inequality_scan(const std::function<double(double, double)>& G, double alpha, double p,
                                       double R, const std::vector<std::pair<FamilyMember, FamilyMember>>& pairs,
                                       double gamma, const GridSpec& g) {
  if (!(R > 0.0)) throw ParameterError("composition_inequality_scan: R must be positive");
  if (pairs.empty()) throw ParameterError("composition_inequality_scan: no pairs");
  if (!admissibility_check(G, alpha).admissible)
    throw ParameterError("composition_inequality_scan: G is not alpha-admissible at 0");
  ScanReport Rp;
  Rp.name = "composition_inequality_scan";
  Rp.params = {{"alpha", alpha}, {"p", p}, {"R", R}, {"gamma", gamma}, {"grid", Json::parse(g.to_json())}};
  SobolevParams sp;
  sp.p = p, sp.alpha = alpha, sp.gamma = gamma;
  const bool integer = std::abs(alpha - std::round(alpha)) < 1e-12 && alpha <= 3.0;
  const Route route = integer ? Route::integer : Route::spectral;
  Rp.params["route"] = route_name(route);
  Rp.columns = {"level", "pair", "lhs", "rhs", "ratio"};
  double best[2] = {0.0, 0.0};
  const GridSpec grids[2] = {g, g.refined()};
  for (int level = 0; level < 2; ++level) {
    std::vector<std::array<double, 3>> out(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      Field f1 = sample(pairs[k].first.rule, grids[level]), f2 = sample(pairs[k].second.rule, grids[level]);
      f1.values *= R / f1.values.abs().maxCoeff();
      f2.values *= R / f2.values.abs().maxCoeff();
      Field c(grids[level]);
      c.values = f1.values.binaryExpr(f2.values, [&](double a, double b) { return G(a, b); });
      const double lhs = sobolev_norm(c, sp, route).value;
      const double rhs = sobolev_norm(f1, sp, route).value + sobolev_norm(f2, sp, route).value;
      out[k] = {lhs, rhs, lhs / rhs};
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      Rp.rows.push_back({double(level), double(k), out[k][0], out[k][1], out[k][2]});
      best[level] = std::max(best[level], out[k][2]);
    }
  }
  Rp.values["max_ratio"] = number(best[0]);
  Rp.values["max_ratio_refined"] = number(best[1]);
  Rp.refinement_ratio = best[0] > 0.0 ? best[1] / best[0] : (best[1] == 0.0 ? 1.0 : INFINITY);
  Rp.check("finite", std::isfinite(best[0]) && std::isfinite(best[1]));
  Rp.check("refinement_stable", std::abs(Rp.refinement_ratio - 1.0) <= 0.2);
  return Rp;
}

// ---- battery ------------------------------------------------------------------------

GridSpec pde_grid(int n) { return GridSpec(-4.0, 4.0, -2.5, 2.5, n, (n - 1) * 5 / 8 + 1); }
LineGrid pde_line_grid(int n) { return LineGrid(-10.0, 10.0, n); }

namespace {

std::function<double(const GroupPoint&)> gaussian_data(double amp, double w) {
  return [amp, w](const GroupPoint& p) {
    const double s = p.s();
    return amp * std::exp(-(p.x * p.x + s * s) / (2.0 * w * w));
  };
}

}  // namespace

void record_trajectory(ScanReport& R, const std::string& id, const SolutionTrajectory& T) {
  R.rows.push_back({double(R.rows.size()), double(T.history.size()), T.max_contraction, T.bound_constant, T.residual,
                    T.residual_tolerance, T.c_tau});
  R.values[id] = T.to_json();
  R.check(id + "_converged", T.converged);
  R.check(id + "_contraction_le_0.6", T.max_contraction <= 0.6);
  R.check(id + "_bound_le_3", T.bound_constant <= 3.0);
  R.check(id + "_residual_certified", T.residual <= T.residual_tolerance);
}

ScanReport pde_battery() {
  ScanReport R;
  R.name = "pde_battery";
  R.columns = {"problem", "iterations", "max_contraction", "bound_constant", "residual", "residual_tolerance", "c_tau"};
  Json ids = Json::array();

  // semilinear heat on ax+b
  for (double gamma : {0.0, 2.0}) {
    CauchyProblem P;
    P.kind = PdeKind::heat;
    P.space = {GroupKind::AxB, pde_grid(), {}, 2.0, 1, gamma};
    P.u0 = gaussian_data(0.2, 0.5);
    P.tau = 0.5;
    P.n_t = 10;
    const std::string id = "heat_axb_gamma" + std::to_string(int(gamma));
    ids.push_back(id);
    record_trajectory(R, id, picard_heat(P, Nonlinearity::power(3)));
  }
  // linear reduction and positivity
  {
    CauchyProblem P;
    P.space = {GroupKind::AxB, pde_grid(), {}, 2.0, 1, 0.0};
    P.u0 = gaussian_data(0.3, 0.5);
    const SolutionTrajectory T = picard_heat(P, Nonlinearity::zero());
    double defect = 0.0;
    for (std::size_t n = 0; n < T.times.size(); ++n) {
      const Field ref = n == 0 ? sample(P.u0, P.space.grid) : heat_apply(sample(P.u0, P.space.grid), T.times[n], 0.0);
      defect = std::max(defect, (T.real_field(n).values - ref.values).abs().maxCoeff());
    }
    R.values["heat_linear_defect"] = number(defect);
    R.values["heat_linear_min"] = number(T.min_value);
    R.check("heat_zero_nonlinearity_is_linear_flow", defect == 0.0 && T.history.size() == 1);
    R.check("heat_positivity", T.min_value >= -1e-8);
  }
  // semilinear heat on the line
  {
    CauchyProblem P;
    P.space.group = GroupKind::Line;
    P.space.line_grid = pde_line_grid();
    P.space.alpha = 1;
    P.u0 = [](const GroupPoint& p) { return 0.2 * std::exp(-p.x * p.x); };
    P.n_t = 20;
    ids.push_back("heat_line");
    record_trajectory(R, "heat_line", picard_heat(P, Nonlinearity::power(3)));
  }
  // Schrodinger: linear flow, then the quintic problem
  {
    const GridSpec g = pde_grid();
    const Field f = sample(gaussian_data(1.0, 0.5), g);
    const CField u0(g, f.values.cast<cplx>());
    const double m0 = dirichlet_l2(u0, 1.0), t0 = lp_norm(u0, 2.0, MeasureTag::Lambda());
    double drift = 0.0, trap_drift = 0.0, edge = 0.0;
    CField u = u0;
    for (int k = 0; k < 40; ++k) {
      u = schrodinger_flow(u, 0.025, 1);
      drift = std::max(drift, std::abs(dirichlet_l2(u, 1.0) - m0) / m0);
      trap_drift = std::max(trap_drift, std::abs(lp_norm(u, 2.0, MeasureTag::Lambda()) - t0) / t0);
      edge = std::max(edge, boundary_ratio(u));
    }
    const CField back = schrodinger_flow(u, -0.025, 40);
    const double rev = dirichlet_l2(CField(g, back.values - u0.values), 1.0) / m0;
    R.values["schrodinger_mass_drift"] = number(drift);
    R.values["schrodinger_trapezoid_mass_drift"] = number(trap_drift);
    R.values["schrodinger_edge_ratio"] = number(edge);
    R.values["schrodinger_reversal_error"] = number(rev);
    if (edge > 1e-3) R.warnings.push_back("linear Schrodinger flow reaches the Dirichlet edge (ratio " + std::to_string(edge) + ")");
    R.check("schrodinger_mass_conserved", drift <= 1e-3);
    R.check("schrodinger_time_reversal", rev <= 1e-3);

    CauchyProblem P;
    P.kind = PdeKind::schrodinger;
    P.space = {GroupKind::AxB, g, {}, 2.0, 2, 1.0};
    P.u0 = gaussian_data(0.15, 0.5);
    P.tau = 0.5;
    P.n_t = 40;
    ids.push_back("schrodinger_axb");
    // alpha = 2 asks F to vanish to third order
    record_trajectory(R, "schrodinger_axb", picard_schrodinger(P, Nonlinearity::quintic_nls()));
  }
  {
    CauchyProblem P;
    P.kind = PdeKind::schrodinger;
    P.space.group = GroupKind::Line;
    P.space.line_grid = pde_line_grid();
    P.space.alpha = 1;
    P.u0 = [](const GroupPoint& p) { return 0.3 * std::exp(-p.x * p.x); };
    P.n_t = 40;
    ids.push_back("schrodinger_line");
    record_trajectory(R, "schrodinger_line", picard_schrodinger(P, Nonlinearity::cubic_nls()));
  }
  // outside the window the run is refused
  {
    CauchyProblem P;
    P.space = {GroupKind::AxB, pde_grid(), {}, 2.0, 1, 0.0};
    P.u0 = gaussian_data(3.0, 0.5);
    P.tau = 1.0;
    bool refused = false;
    try {
      picard_heat(P, Nonlinearity::power(3));
    } catch (const WindowRefusal& e) {
      refused = true;
      R.values["refused_c_tau"] = number(e.c_tau);
    }
    R.check("window_refusal", refused);
  }
  R.params = {{"problems", ids}};
  return R;
}

void export_trajectory(const SolutionTrajectory& T, const std::string& dir) {
  std::filesystem::create_directories(dir);
  Json files = Json::array();
  for (std::size_t k = 0; k < T.states.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04zu", k);
    std::string path = dir + "/" + name;
    if (T.group == GroupKind::AxB) {
      path += ".bin";
      if (T.kind == PdeKind::heat)
        write_binary(T.real_field(k), path);
      else
        write_binary(T.complex_field(k), path);
    } else {
      path += ".csv";
      std::ostringstream o;
      o.precision(17);
      o << "x,re,im\n";
      const CLineField f = T.complex_line(k);
      for (int i = 0; i < f.grid.n; ++i) o << f.grid.x(i) << ',' << f.values(i).real() << ',' << f.values(i).imag() << '\n';
      write_atomic(path, o.str());
    }
    files.push_back(std::filesystem::path(path).filename().string());
  }
  Json j = T.to_json();
  j["files"] = files;
  write_atomic(dir + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace driftlab
