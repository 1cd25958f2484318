#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlab/errors.hpp"
#include "driftlab/family.hpp"
#include "driftlab/heat.hpp"
#include "driftlab/pde.hpp"
#include "oracles.hpp"

#include <unsupported/Eigen/FFT>

#include <chrono>
#include <cmath>
#include <numbers>

using namespace driftlab;
using line::CLineField;
using line::LineField;
using line::LineGrid;

namespace {

bool all_checks(const ScanReport& R) {
  for (const auto& c : R.checks)
    if (!c.pass) MESSAGE(R.name << ": " << c.name << " failed " << c.detail);
  return R.pass();
}

// i u_t - u_xx = |u|^2 u on the periodic interval [x0, x0 + n h), Strang splitting
Eigen::ArrayXcd split_step_nls(const std::function<double(double)>& u0, double x0, double h, int n, double tau,
                               int steps) {
  using cd = std::complex<double>;
  Eigen::FFT<double> fft;
  std::vector<cd> u(n), uh(n);
  for (int i = 0; i < n; ++i) u[i] = u0(x0 + i * h);
  const double dt = tau / steps, L = n * h;
  std::vector<cd> lin(n);
  for (int k = 0; k < n; ++k) {
    const double xi = 2.0 * std::numbers::pi / L * (k <= n / 2 ? k : k - n);
    lin[k] = std::exp(cd(0.0, xi * xi * dt));  // u_t = -i u_xx -> e^{i xi^2 dt}
  }
  auto half_nonlinear = [&] {
    for (auto& z : u) z *= std::exp(cd(0.0, -0.5 * dt * std::norm(z)));
  };
  for (int s = 0; s < steps; ++s) {
    half_nonlinear();
    fft.fwd(uh, u);
    for (int k = 0; k < n; ++k) uh[k] *= lin[k];
    fft.inv(u, uh);
    half_nonlinear();
  }
  return Eigen::Map<Eigen::ArrayXcd>(u.data(), n);
}

CauchyProblem line_problem(PdeKind kind, double amp, int n_t) {
  CauchyProblem P;
  P.kind = kind;
  P.space.group = GroupKind::Line;
  P.space.line_grid = pde_line_grid();
  P.space.alpha = 1;
  P.u0 = [amp](const GroupPoint& p) { return amp * std::exp(-p.x * p.x); };
  P.n_t = n_t;
  return P;
}

}  // namespace

TEST_CASE("admissibility by high-order differences") {
  CHECK(admissibility_check(Nonlinearity::power(3), 2.0).admissible);
  CHECK_FALSE(admissibility_check(Nonlinearity::power(3), 3.0).admissible);
  CHECK(admissibility_check(Nonlinearity::identity_map(), 0.0).admissible);
  CHECK_FALSE(admissibility_check(Nonlinearity::identity_map(), 1.0).admissible);
  for (double a : {0.0, 1.0, 2.5}) CHECK_FALSE(admissibility_check(Nonlinearity::affine_square(0.1), a).admissible);
  CHECK(admissibility_check(Nonlinearity::cubic_nls(), 2.0).admissible);
  CHECK_FALSE(admissibility_check(Nonlinearity::cubic_nls(), 3.0).admissible);
  CHECK(admissibility_check(Nonlinearity::quintic_nls(), 4.0).admissible);

  // third derivative of u^3 at 0 is 6
  const AdmissibilityReport r = admissibility_check(Nonlinearity::power(3), 3.0);
  REQUIRE(r.derivatives.size() == 4);
  CHECK(r.derivatives[3] == doctest::Approx(6.0).epsilon(1e-6));

  CHECK(admissibility_check([](double x, double y) { return x * y; }, 1.0).admissible);
  CHECK_FALSE(admissibility_check([](double x, double y) { return x * y; }, 2.0).admissible);
  CHECK_FALSE(admissibility_check([](double x, double) { return std::sin(x); }, 1.0).admissible);
}

TEST_CASE("Lipschitz estimate of u^3 at small radius") {
  YSpace Y{GroupKind::AxB, pde_grid(33), {}, 2.0, 0, 0.0};
  const LipschitzReport L = lipschitz_estimate(Nonlinearity::power(3), 0.1, Y);
  // the sup-norm part alone is Lipschitz with constant 3 R^2; Y-balls of radius R keep sup |u|
  // below R, so the raw sup sits under 3 R^2 and c(R) carries the safety factor
  MESSAGE("empirical " << L.empirical << ", c(R) " << L.c);
  CHECK(L.empirical <= 0.03);
  CHECK(L.c >= 0.03 / 4.0);
  CHECK(L.c <= 0.03 * 4.0);
  CHECK(L.c == doctest::Approx(2.0 * std::max(L.empirical, L.empirical_refined)));
  CHECK(L.pairs > 0);

  double prev = 0.0;
  for (double R : {0.05, 0.1, 0.2}) {
    const double c = lipschitz_estimate(Nonlinearity::power(3), R, Y).c;
    CHECK(c >= prev);
    prev = c;
  }
  // u = v pairs are never sampled into the ratio
  CHECK(lipschitz_estimate(Nonlinearity::zero(), 0.1, Y).c == 0.0);
}

TEST_CASE("heat: linear reduction and zero data") {
  CauchyProblem P;
  P.space = {GroupKind::AxB, pde_grid(49), {}, 2.0, 1, 0.0};
  P.u0 = [](const GroupPoint& p) { return 0.3 * std::exp(-2.0 * (p.x * p.x + p.s() * p.s())); };
  P.n_t = 5;
  const SolutionTrajectory T = picard_heat(P, Nonlinearity::zero());
  CHECK(T.converged);
  CHECK(T.history.size() == 1);
  const Field u0 = sample(P.u0, P.space.grid);
  for (std::size_t n = 1; n < T.times.size(); ++n)
    CHECK((T.real_field(n).values - heat_apply(u0, T.times[n], 0.0).values).abs().maxCoeff() == 0.0);

  P.u0 = [](const GroupPoint&) { return 0.0; };
  const SolutionTrajectory Z = picard_heat(P, Nonlinearity::power(3));
  for (std::size_t n = 0; n < Z.times.size(); ++n) CHECK(Z.states[n].abs().maxCoeff() == 0.0);
}

TEST_CASE("heat on the line matches explicit time stepping") {
  const CauchyProblem P = line_problem(PdeKind::heat, 0.2, 20);
  const SolutionTrajectory T = picard_heat(P, Nonlinearity::power(3));
  REQUIRE(T.converged);
  CHECK(T.max_contraction <= 0.6);
  const LineGrid g = P.space.line_grid;
  // the oracle runs on a 4x finer grid and is read back at the common nodes
  const int fine = 4 * (g.n - 1) + 1;
  const std::vector<double> ref =
      oracle::explicit_heat_cubic([](double x) { return 0.2 * std::exp(-x * x); }, g.x_min, g.x_max, fine, P.tau);
  const LineField u = T.real_line(T.times.size() - 1);
  double err = 0.0;
  for (int i = 0; i < g.n; ++i) err = std::max(err, std::abs(u.values(i) - ref[4 * i]));
  MESSAGE("sup error against the explicit oracle " << err);
  CHECK(err <= 1e-3);
}

TEST_CASE("Schrodinger on the line matches split-step Fourier") {
  const CauchyProblem P = line_problem(PdeKind::schrodinger, 0.3, 40);
  const SolutionTrajectory T = picard_schrodinger(P, Nonlinearity::cubic_nls());
  REQUIRE(T.converged);
  const LineGrid g = P.space.line_grid;
  const Eigen::ArrayXcd ref =
      split_step_nls([](double x) { return 0.3 * std::exp(-x * x); }, g.x_min, g.h(), g.n - 1, P.tau, 2000);
  const CLineField u = T.complex_line(T.times.size() - 1);
  double err = 0.0;
  for (int i = 0; i < g.n - 1; ++i) err = std::max(err, std::abs(u.values(i) - ref(i)));
  MESSAGE("sup error against split-step Fourier " << err);
  CHECK(err <= 1e-2);
}

TEST_CASE("Crank-Nicolson steps solve the midpoint equation of the generator") {
  const GridSpec g = pde_grid(33);
  Field f = sample([](const GroupPoint& p) { return std::exp(-(p.x * p.x + p.s() * p.s())) * (1.0 + 0.3 * p.x); }, g);
  const CField u0(g, f.values.cast<cplx>());
  const double dt = 0.05;
  const CField u1 = schrodinger_flow(u0, dt, 1);
  // i (u1 - u0) / dt + L (u1 + u0) / 2 = 0
  CField mid(g, 0.5 * (u1.values + u0.values));
  const Eigen::ArrayXXcd r = cplx(0.0, 1.0 / dt) * (u1.values - u0.values) + generator_apply(mid, 1.0).values;
  CHECK(r.abs().maxCoeff() <= 1e-9 * u0.values.abs().maxCoeff() / dt);

  CHECK(dirichlet_l2(u1, 1.0) == doctest::Approx(dirichlet_l2(u0, 1.0)).epsilon(1e-12));
  const CField back = schrodinger_flow(u1, -dt, 1);
  CHECK((back.values - u0.values).abs().maxCoeff() <= 1e-12);

  const CLineField l0(LineGrid(-5.0, 5.0, 101), Eigen::ArrayXcd::Constant(101, cplx(0.0)));
  CHECK(schrodinger_flow(l0, dt, 3).values.abs().maxCoeff() == 0.0);
}

TEST_CASE("Schrodinger: zero data and refusals") {
  CauchyProblem P = line_problem(PdeKind::schrodinger, 0.0, 10);
  const SolutionTrajectory Z = picard_schrodinger(P, Nonlinearity::cubic_nls());
  for (const auto& s : Z.states) CHECK(s.abs().maxCoeff() == 0.0);

  CauchyProblem Q;
  Q.kind = PdeKind::schrodinger;
  Q.space = {GroupKind::AxB, pde_grid(33), {}, 2.0, 2, 0.0};
  Q.u0 = [](const GroupPoint&) { return 0.0; };
  CHECK_THROWS_AS(picard_schrodinger(Q, Nonlinearity::quintic_nls()), ParameterError);  // gamma != 1
  Q.space.gamma = 1.0;
  Q.space.alpha = 1;
  CHECK_THROWS_AS(picard_schrodinger(Q, Nonlinearity::quintic_nls()), ParameterError);  // alpha <= d/2
  Q.space.alpha = 2;
  CHECK_THROWS_AS(picard_schrodinger(Q, Nonlinearity::cubic_nls()), ParameterError);  // not 3-admissible
  Q.space.p = 3.0;
  CHECK_THROWS_AS(picard_schrodinger(Q, Nonlinearity::quintic_nls()), ParameterError);
}

TEST_CASE("window refusal carries c(R) tau") {
  CauchyProblem P;
  P.space = {GroupKind::AxB, pde_grid(33), {}, 2.0, 1, 0.0};
  P.u0 = [](const GroupPoint& p) { return 3.0 * std::exp(-2.0 * (p.x * p.x + p.s() * p.s())); };
  P.tau = 1.0;
  try {
    picard_heat(P, Nonlinearity::power(3));
    FAIL("expected a refusal");
  } catch (const WindowRefusal& e) {
    CHECK(e.c_tau > 0.5);
  }
  // inadmissible nonlinearity is a parameter error, not a refusal
  P.u0 = [](const GroupPoint&) { return 0.0; };
  CHECK_THROWS_AS(picard_heat(P, Nonlinearity::affine_square(0.1)), ParameterError);
  P.tau = -1.0;
  CHECK_THROWS_AS(picard_heat(P, Nonlinearity::power(3)), ParameterError);
}

TEST_CASE("composition inequality") {
  const GridSpec g = battery_grid(33);
  const auto bumps = random_bumps(11, 6);
  std::vector<std::pair<FamilyMember, FamilyMember>> pairs;
  for (std::size_t k = 0; k + 1 < bumps.size(); k += 2) pairs.push_back({bumps[k], bumps[k + 1]});

  const double R = 0.7;
  const ScanReport xy = composition_inequality_scan([](double x, double y) { return x * y; }, 0.0, 2.0, R, pairs, 1.0, g);
  CHECK(all_checks(xy));
  CHECK(xy.values["max_ratio"].get<double>() <= R);

  const ScanReport zero = composition_inequality_scan([](double, double) { return 0.0; }, 0.0, 2.0, R, pairs, 0.0, g);
  CHECK(zero.values["max_ratio"].get<double>() == 0.0);

  const ScanReport x2y =
      composition_inequality_scan([](double x, double y) { return x * x * y; }, 0.5, 2.0, 1.0, pairs, 0.0, g);
  CHECK(all_checks(x2y));
  CHECK(std::isfinite(x2y.values["max_ratio"].get<double>()));

  CHECK_THROWS_AS(composition_inequality_scan([](double x, double) { return x + 0.1; }, 0.0, 2.0, R, pairs, 0.0, g),
                  ParameterError);
}

TEST_CASE("pde battery") {
  const auto t0 = std::chrono::steady_clock::now();
  const ScanReport R = pde_battery();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("pde battery " << secs << " s");
  CHECK(all_checks(R));
  CHECK(secs <= 300.0);
  CHECK(R.values["schrodinger_mass_drift"].get<double>() <= 1e-3);
}
