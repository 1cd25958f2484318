#include "driftlab/batteries.hpp"

#include "driftlab/embeddings.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/family.hpp"
#include "driftlab/hardy.hpp"
#include "driftlab/heat.hpp"
#include "driftlab/line.hpp"
#include "driftlab/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace driftlab {

Json module_versions() {
  return {{"group_core", "1.0.0"}, {"grid_field", "1.0.0"},          {"heat", "1.0.0"}, {"sobolev", "1.0.0"},
          {"embeddings", "1.0.0"}, {"hardy_counterexamples", "1.0.0"}, {"pde", "1.0.0"},  {"cli", "1.0.0"}};
}

namespace {

Json list(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

const std::vector<double>& or_default(const std::vector<double>& given, const std::vector<double>& fallback) {
  return given.empty() ? fallback : given;
}

double gaussian(const GroupPoint& p, double x0, double s0, double w) {
  const double dx = p.x - x0, ds = p.s() - s0;
  return std::exp(-(dx * dx + ds * ds) / (w * w));
}

}  // namespace

void RunConfig::validate() const {
  for (double g : gammas)
    if (!std::isfinite(g)) throw ParameterError("gamma must be finite");
  for (double p : ps)
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("p must be a finite number >= 1");
  for (double a : alphas)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("alpha must be a finite number >= 0");
  for (double t : times)
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("heat times must be positive");
  if (!std::isnan(c) && !(c > 0.0)) throw ParameterError("c must be positive");
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  if (amplitude && !std::isfinite(*amplitude)) throw ParameterError("amplitude must be finite");
}

Json RunConfig::to_json() const {
  Json j;
  j["group"] = group == GroupKind::AxB ? "axb" : "line";
  j["gamma"] = list(gammas);
  j["p"] = list(ps);
  j["alpha"] = list(alphas);
  j["t"] = list(times);
  j["c"] = number(c);
  j["grid"] = grid ? Json::parse(grid->to_json()) : Json();
  j["seed"] = seed;
  j["amplitude"] = amplitude ? number(*amplitude) : Json();
  j["tau"] = number(tau);
  j["kind"] = pde_kind_name(kind);
  return j;
}

std::string RunConfig::hash() const { return fnv1a_hex(to_json().dump()); }

GridSpec parse_grid(const std::string& text) {
  std::stringstream in(text);
  std::string item;
  std::vector<std::string> parts;
  while (std::getline(in, item, ',')) parts.push_back(item);
  if (parts.size() != 4) throw ParameterError("--grid expects nx,ns,xmax,smax");
  try {
    const int nx = std::stoi(parts[0]), ns = std::stoi(parts[1]);
    const double xmax = std::stod(parts[2]), smax = std::stod(parts[3]);
    if (nx < 9 || ns < 9) throw ParameterError("--grid needs at least 9 nodes per direction");
    if (!(xmax > 0.0) || !(smax > 0.0)) throw ParameterError("--grid needs positive xmax and smax");
    return GridSpec(-xmax, xmax, -smax, smax, nx, ns);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ParameterError*>(&e)) throw;
    throw ParameterError("--grid: cannot parse '" + text + "'");
  }
}

Json report_document(const ScanReport& R, const RunConfig& cfg, const std::string& timestamp) {
  Json d;
  d["schema"] = kReportSchema;
  d["timestamp"] = timestamp;
  d["config"] = cfg.to_json();
  d["config_hash"] = cfg.hash();
  d["module_versions"] = module_versions();
  d["generator"] = SeededStream::name();
  d["pass"] = R.pass();
  d["report"] = R.to_json();
  return d;
}

// ---- heat ---------------------------------------------------------------------------------

std::vector<ScanReport> heat_battery(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<double> ts = or_default(cfg.times, {0.1, 0.5, 1.0});
  const std::vector<double> cert_t{0.05, 0.1, 0.25, 0.5, 1.0};
  std::vector<ScanReport> out;

  // the line kernel against the Gauss closed form
  {
    ScanReport R;
    R.name = "line_heat_kernel";
    R.params = {{"t", list(ts)}};
    R.columns = {"t", "sup_relative_error"};
    line::LineHeatModel M(12.0);
    double worst = 0.0;
    for (double t : ts) {
      double e = 0.0;
      for (double x = -5.0; x <= 5.0; x += 0.0137) {
        const double ref = line::gauss_kernel(t, x);
        if (ref < 1e-300) continue;
        e = std::max(e, std::abs(M.p_t(t, x) / ref - 1.0));
      }
      R.rows.push_back({t, e});
      worst = std::max(worst, e);
    }
    R.values["max_sup_relative_error"] = number(worst);
    R.check("gauss_closed_form_1e-6", worst <= 1e-6);
    // envelope of the line kernel, d = 1
    std::vector<EnvelopeSample> samples;
    for (double t : cert_t)
      for (double x = -5.0; x <= 5.0; x += 0.05) samples.push_back({t, x * x, std::log(M.p_t(t, x))});
    const KernelBoundCertificate C = fit_envelope(samples, 0.5);
    R.values["line_certificate_b"] = number(C.b);
    R.check("line_gaussian_certificate", C.success && C.b >= 0.2, C.detail);
    out.push_back(std::move(R));
  }
  if (cfg.group == GroupKind::Line) return out;

  const std::vector<double> gammas = or_default(cfg.gammas, {0.0, 1.0, 2.0});
  const GridSpec g = cfg.grid.value_or(GridSpec(-6.0, 6.0, -3.0, 3.0, 128, 128));
  const Field f = sample([](const GroupPoint& p) { return gaussian(p, 0.2, 0.1, 0.6); }, g);
  const Field h = sample([](const GroupPoint& p) { return gaussian(p, -0.4, -0.3, 0.5) * (1.2 + p.x); }, g);

  ScanReport R;
  R.name = "heat_invariants";
  R.params = {{"gamma", list(gammas)}, {"t", list(ts)}, {"grid", Json::parse(g.to_json())}};
  R.columns = {"gamma", "t", "mass", "semigroup_defect", "symmetry_defect", "truncation_mass"};
  double worst_mass = 0.0, worst_semi = 0.0, worst_sym = 0.0, worst_trunc = 0.0;
  for (double gamma : gammas) {
    const MeasureTag mu = MeasureTag::Mu(gamma);
    for (double t : ts) {
      const double mass = heat_mass(t, gamma);
      // P_{t/2} P_{t/2} f against P_t f, relative to f
      ConvDiagnostics d;
      const Field one = heat_apply(f, t, gamma, &d);
      const Field two = heat_apply(heat_apply(f, 0.5 * t, gamma), 0.5 * t, gamma);
      const double semi = lp_norm(two - one, 2.0, mu) / lp_norm(f, 2.0, mu);
      const double l = integrate(Field{g, one.values * h.values}, mu);
      const double r = integrate(Field{g, f.values * heat_apply(h, t, gamma).values}, mu);
      const double sym = std::abs(l - r) / std::max(std::abs(l), std::abs(r));
      R.rows.push_back({gamma, t, mass, semi, sym, d.truncation_mass});
      worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
      worst_semi = std::max(worst_semi, semi);
      worst_sym = std::max(worst_sym, sym);
      worst_trunc = std::max(worst_trunc, d.truncation_mass);
    }
  }
  R.truncation_mass = worst_trunc;
  R.values["max_mass_deviation"] = number(worst_mass);
  R.values["max_semigroup_defect"] = number(worst_semi);
  R.values["max_symmetry_defect"] = number(worst_sym);
  R.check("mass_in_[0.999,1.001]", worst_mass <= 1e-3);
  R.check("semigroup_defect_le_1e-2", worst_semi <= 1e-2);
  R.check("symmetry_defect_le_1e-4", worst_sym <= 1e-4);
  out.push_back(std::move(R));

  for (double gamma : gammas) {
    ScanReport C;
    C.name = "gaussian_certificate";
    C.params = {{"gamma", number(gamma)}, {"t", list(cert_t)}};
    C.columns = {"m", "b", "omega", "prefactor", "max_violation", "quadratic_r2"};
    const HeatKernelModel M(gamma);
    for (int m : {0, 1}) {
      const KernelBoundCertificate K = certify_gaussian_bound(M, cert_t, m, 49);
      C.rows.push_back({double(m), K.b, K.omega, K.prefactor, K.max_violation, K.quadratic_r2});
      C.check("m" + std::to_string(m) + "_certified_b_ge_0.2", K.success && K.b >= 0.2, K.detail);
    }
    out.push_back(std::move(C));
  }
  return out;
}

// ---- sobolev ------------------------------------------------------------------------------

namespace {

// ||f||_p + ||D f||_p for every p, with D f computed once
std::vector<double> norms_for(const Field& f, const Field& Df, const std::vector<double>& ps, double gamma) {
  std::vector<double> v;
  for (double p : ps) v.push_back(lp_norm(f, p, MeasureTag::Mu(gamma)) + lp_norm(Df, p, MeasureTag::Mu(gamma)));
  return v;
}

ScanReport route_triangle(const std::vector<double>& gammas, const std::vector<double>& ps,
                          const std::vector<double>& alphas, double c, const GridSpec& g, std::uint64_t seed) {
  ScanReport R;
  R.name = "route_triangle";
  R.params = {{"gamma", list(gammas)}, {"p", list(ps)}, {"alpha", list(alphas)}, {"c", number(c)},
              {"grid", Json::parse(g.to_json())}};
  R.columns = {"gamma", "p", "alpha", "pair", "member", "ratio", "ratio_refined", "drift"};
  const auto fam = standard_family(seed);
  const GridSpec grids[2] = {g, g.refined()};
  const double t_pre = presmoothing_time(g);
  double lo = INFINITY, hi = 0.0, drift = 0.0;
  Json pairs = Json::array();
  for (double alpha : alphas) {
    const bool integer = std::abs(alpha - std::round(alpha)) < 1e-12 && alpha <= 3.0;
    const bool square = alpha > 0.0 && alpha < 1.0;
    if (!integer && !square) throw ParameterError("route_triangle: alpha needs a second route (integer or < 1)");
    for (double gamma : gammas) {
      SobolevParams sp;
      sp.alpha = alpha, sp.gamma = gamma, sp.c = c;
      // value[level][member][route][p]; routes: spectral, integer or square function
      std::vector<std::vector<std::array<std::vector<double>, 2>>> val(2);
      for (int level = 0; level < 2; ++level) {
        val[level].resize(fam.size());
#pragma omp parallel for schedule(dynamic)
        for (std::size_t k = 0; k < fam.size(); ++k) {
          // one smoothing time on both grids: the same function at two resolutions
          const Field f = heat_apply(sample(fam[k].rule, grids[level]), t_pre, gamma);
          val[level][k][0] = norms_for(f, frac_power_apply(f, sp), ps, gamma);
          if (integer) {
            for (double p : ps) {
              SobolevParams q = sp;
              q.p = p;
              val[level][k][1].push_back(sobolev_norm(f, q, Route::integer).value);
            }
          } else {
            val[level][k][1] = norms_for(f, square_function(f, alpha), ps, gamma);
          }
        }
      }
      const double pair_id = integer ? 0.0 : 1.0;
      for (std::size_t k = 0; k < fam.size(); ++k)
        for (std::size_t ip = 0; ip < ps.size(); ++ip) {
          const double r0 = val[0][k][0][ip] / val[0][k][1][ip], r1 = val[1][k][0][ip] / val[1][k][1][ip];
          const double d = std::abs(r1 / r0 - 1.0);
          R.rows.push_back({gamma, ps[ip], alpha, pair_id, double(k), r0, r1, d});
          lo = std::min({lo, r0, r1});
          hi = std::max({hi, r0, r1});
          drift = std::max(drift, d);
        }
    }
    pairs.push_back(integer ? "spectral/integer" : "spectral/square_function");
  }
  R.params["pairs"] = pairs;
  R.values["min_ratio"] = number(lo);
  R.values["max_ratio"] = number(hi);
  R.values["max_refinement_drift"] = number(drift);
  R.refinement_ratio = 1.0 + drift;
  R.check("ratios_in_[1/20,20]", lo >= 1.0 / 20.0 && hi <= 20.0);
  R.check("refinement_drift_lt_0.2", drift < 0.2);
  return R;
}

}  // namespace

std::vector<ScanReport> sobolev_battery(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<double> ps = or_default(cfg.ps, {1.5, 2.0, 3.0});
  std::vector<ScanReport> out;
  {
    // the line: the Riesz transforms are Fourier multipliers bounded by one for p = 2
    const double c = std::isnan(cfg.c) ? 1.5 : cfg.c;
    for (int m : {1, 2})
      for (double p : ps) {
        ScanReport R = line::riesz_ratio_scan(m, p, c, line_family(), line_battery_grid(513));
        if (p == 2.0) R.check("p2_ratio_le_1.05", R.values["max_ratio"].get<double>() <= 1.05);
        out.push_back(std::move(R));
      }
  }
  if (cfg.group == GroupKind::Line) return out;

  const std::vector<double> gammas = or_default(cfg.gammas, {0.0, 1.0, 2.0});
  const std::vector<double> alphas = or_default(cfg.alphas, {0.5, 1.0});
  const GridSpec g = cfg.grid.value_or(battery_grid(33));
  out.push_back(route_triangle(gammas, ps, alphas, cfg.c, g, cfg.seed));

  const auto fam = standard_family(cfg.seed);
  const std::vector<Word> words{{FrameField::X0}, {FrameField::X1}, {FrameField::X0, FrameField::X1},
                                {FrameField::X1, FrameField::X1}};
  for (double gamma : gammas)
    for (double p : ps)
      for (const Word& w : words) {
        SobolevParams sp;
        sp.p = p, sp.alpha = double(w.size()), sp.gamma = gamma, sp.c = cfg.c;
        out.push_back(riesz_ratio_scan(w, sp, fam, g));
      }
  return out;
}

// ---- embeddings ---------------------------------------------------------------------------

std::vector<ScanReport> embed_battery(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<double> gammas = or_default(cfg.gammas, {0.0, 1.0, 2.0});
  const GridSpec g = cfg.grid.value_or(battery_grid(33));
  const auto fam = standard_family(cfg.seed);
  std::vector<ScanReport> out;

  for (double gamma : gammas)
    for (const EmbeddingCase& c : embedding_battery(gamma)) {
      if (!cfg.ps.empty() && std::find(cfg.ps.begin(), cfg.ps.end(), c.p) == cfg.ps.end()) continue;
      out.push_back(embedding_ratio_scan(c, fam, g));
    }

  for (double r : {1.5, 2.0, 3.0}) out.push_back(bessel_integrability_scan(0.0, 0.0, r, threshold_bracket(r)));

  // the unweighted target L^q(mu_gamma), q != p: a nonzero power of a rules the embedding out
  const FamilyMember bump{"bump", [](const GroupPoint& p) { return gaussian(p, 0.0, 0.0, std::sqrt(0.5)); }};
  const GridSpec tg = translation_grid();
  std::vector<double> as;
  for (int k = -4; k <= 4; ++k) as.push_back(std::exp(0.25 * k));
  for (double gamma : gammas) {
    ScanReport R = translation_obstruction_scan(bump, 2.0, 4.0, gamma, as, tg);
    const bool divergent = std::abs((1.0 - gamma) * (0.25 - 0.5)) > 0.0;
    R.values["expected_divergence"] = divergent;
    if (divergent) R.warnings.push_back("L^2_1(mu_gamma) does not embed in L^4(mu_gamma): the constant scales like a power of a");
    out.push_back(std::move(R));
  }

  // the exact translation factor on seeded random (y, q, gamma)
  {
    ScanReport R;
    R.name = "translation_identity_battery";
    R.params = {{"seed", cfg.seed}, {"count", 20}, {"p", 2.0}};
    R.columns = {"x_y", "a_y", "q", "gamma", "factor_q", "worst_relative_error"};
    SeededStream rng(cfg.seed);
    double worst = 0.0;
    int failures = 0;
    for (int k = 0; k < 20; ++k) {
      const GroupPoint y(rng.uniform(-1.0, 1.0), std::exp(rng.uniform(-0.8, 0.8)));
      const double q = rng.uniform(1.2, 4.0);
      const double u = rng.uniform(-1.0, 3.0);
      const double gamma = cfg.gammas.empty() ? u : cfg.gammas[k % cfg.gammas.size()];
      const ScanReport S = translation_scaling_identity(bump, y, 2.0, q, gamma, tg);
      const double err = S.values["max_rel_error"].get<double>();
      R.rows.push_back({y.x, y.a, q, gamma, S.values["factor_q"].get<double>(), err});
      worst = std::max(worst, err);
      if (!S.pass()) ++failures;
    }
    R.values["worst_relative_error"] = number(worst);
    R.check("identity_within_1pct_all", failures == 0 && worst <= 0.01);
    out.push_back(std::move(R));
  }

  out.push_back(young_battery(cfg.seed, 50, young_grid(49)));
  return out;
}

// ---- counterexamples ----------------------------------------------------------------------

std::vector<ScanReport> counterexample_battery(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<double> gammas = or_default(cfg.gammas, {0.0, 0.5, 2.0});
  const std::vector<double> ps = or_default(cfg.ps, {2.0});
  std::vector<ScanReport> out;
  for (double gamma : gammas)
    for (double p : ps) {
      const NuWindow W = nu_window(gamma, p);
      const double nu = 0.5 * (W.lo + W.hi);
      const double eta = gamma < 1.0 ? 1.0 : 0.0;
      out.push_back(nobmo_scan(gamma, p, nu, eta, default_y_grid(gamma)));
      out.push_back(algebra_failure_scan(gamma, p, nu, 1, default_depths()));
      // nu grid through both edges, ten steps across the window
      const double step = std::abs(W.hi - W.lo) / 10.0;
      const double edge = (1.0 - gamma) / p;
      std::vector<double> nus;
      for (int k = 0; k <= 30; ++k) nus.push_back(edge > 0.0 ? k * step : edge * 1.5 + k * step);
      out.push_back(algebra_window_scan(gamma, p, nus, default_depths()));
    }
  return out;
}

// ---- pde ----------------------------------------------------------------------------------

PdeRun pde_run(const RunConfig& cfg) {
  cfg.validate();
  PdeRun run;
  if (!cfg.amplitude) {
    run.reports.push_back(pde_battery());
    const GridSpec g = cfg.grid.value_or(battery_grid(33));
    const auto bumps = random_bumps(cfg.seed, 6);
    std::vector<std::pair<FamilyMember, FamilyMember>> pairs;
    for (std::size_t k = 0; k + 1 < bumps.size(); k += 2) pairs.push_back({bumps[k], bumps[k + 1]});
    const double gamma = cfg.gammas.empty() ? 1.0 : cfg.gammas.front();
    ScanReport xy = composition_inequality_scan([](double x, double y) { return x * y; }, 0.0, 2.0, 0.7, pairs, gamma, g);
    xy.check("ratio_le_R", xy.values["max_ratio"].get<double>() <= 0.7);
    run.reports.push_back(std::move(xy));
    run.reports.push_back(
        composition_inequality_scan([](double x, double y) { return x * x * y; }, 0.5, 2.0, 1.0, pairs, gamma, g));
    return run;
  }

  const bool axb = cfg.group == GroupKind::AxB;
  const bool schr = cfg.kind == PdeKind::schrodinger;
  CauchyProblem P;
  P.kind = cfg.kind;
  P.space.group = cfg.group;
  P.space.grid = axb ? cfg.grid.value_or(pde_grid()) : GridSpec();
  P.space.line_grid = pde_line_grid();
  P.space.p = cfg.ps.empty() ? 2.0 : cfg.ps.front();
  const double alpha = cfg.alphas.empty() ? (schr && axb ? 2.0 : 1.0) : cfg.alphas.front();
  if (std::abs(alpha - std::round(alpha)) > 0.0) throw ParameterError("pde: alpha must be 0, 1 or 2");
  P.space.alpha = static_cast<int>(alpha);
  P.space.gamma = cfg.gammas.empty() ? (schr && axb ? 1.0 : 0.0) : cfg.gammas.front();
  const double amp = *cfg.amplitude;
  P.u0 = [amp](const GroupPoint& p) { return amp * std::exp(-(p.x * p.x + p.s() * p.s()) / 0.5); };
  P.tau = cfg.tau;
  P.n_t = schr ? 40 : 10;
  const Nonlinearity F = !schr ? Nonlinearity::power(3) : (axb ? Nonlinearity::quintic_nls() : Nonlinearity::cubic_nls());
  SolutionTrajectory T = schr ? picard_schrodinger(P, F) : picard_heat(P, F);

  ScanReport R;
  R.name = "pde_problem";
  R.params = P.to_json();
  R.params["nonlinearity"] = F.name;
  R.columns = {"problem", "iterations", "max_contraction", "bound_constant", "residual", "residual_tolerance", "c_tau"};
  record_trajectory(R, "problem", T);
  run.reports.push_back(std::move(R));
  run.trajectory = std::move(T);
  return run;
}

}  // namespace driftlab
