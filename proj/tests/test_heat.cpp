#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlab/errors.hpp"
#include "driftlab/heat.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace driftlab;

namespace {
double bump(const GroupPoint& p, double x0, double s0, double w) {
  const double r2 = (p.x - x0) * (p.x - x0) + (p.s() - s0) * (p.s() - s0);
  return std::exp(-r2 / (w * w));
}
double inner(const Field& f, const Field& g, const MeasureTag& m) { return integrate(Field{f.spec, f.values * g.values}, m); }
}  // namespace

TEST_CASE("McKean kernel against an independent Simpson evaluation") {
  for (double t : {0.02, 0.1, 0.5, 1.0, 2.0})
    for (double r : {0.0, 0.01, 0.3, 1.0, 3.0}) {
      const double ref = oracle::mckean(t, r);
      CHECK(hyperbolic_kernel(t, r) == doctest::Approx(ref).epsilon(1e-6));
    }
  CHECK_THROWS_AS(hyperbolic_kernel(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(hyperbolic_kernel(-1.0, 1.0), DomainError);
  CHECK(hyperbolic_kernel_tail_bound(1.0, 0.5) < 1e-20);
}

TEST_CASE("McKean kernel is a probability density for lambda and decreasing in r") {
  for (double t : {0.1, 0.5, 1.0}) {
    // int h_t dlambda = 2 pi int h_t(r) sinh r dr
    const double mass = oracle::adaptive_simpson(
        [t](double r) { return 2 * std::numbers::pi * hyperbolic_kernel(t, r) * std::sinh(r); }, 0.0,
        30.0 * std::sqrt(t) + 2 * t, 1e-9);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    double prev = hyperbolic_kernel(t, 0.0);
    for (double r = 0.05; r < 8; r += 0.05) {
      const double v = hyperbolic_kernel(t, r);
      CHECK(v < prev);
      CHECK(v > 0.0);
      prev = v;
    }
  }
}

TEST_CASE("McKean kernel semigroup law by 2-D quadrature") {
  // int h_s(d(e,y)) h_t(d(y,w)) dlambda(y) = h_{s+t}(d(e,w)), polar coordinates about e:
  // cosh d(y, w) = cosh rho cosh D - sinh rho sinh D cos th
  for (double D : {0.0, 0.7, 1.5}) {
    const double s = 0.2, t = 0.3;
    auto radial = [&](double rho) {
      auto ang = [&](double th) {
        const double c = std::cosh(rho) * std::cosh(D) - std::sinh(rho) * std::sinh(D) * std::cos(th);
        return hyperbolic_kernel(t, std::acosh(std::max(c, 1.0)));
      };
      return hyperbolic_kernel(s, rho) * std::sinh(rho) * 2 * oracle::simpson(ang, 0.0, std::numbers::pi, 64);
    };
    const double lhs = oracle::simpson(radial, 0.0, 6.0, 400);
    CHECK(lhs == doctest::Approx(hyperbolic_kernel(s + t, D)).epsilon(1e-3));
  }
}

TEST_CASE("kernel chain and tables") {
  HeatKernelModel m1(1.0);
  for (double t : {0.1, 0.7})
    for (const GroupPoint& z : {GroupPoint(0.3, 0.5), GroupPoint(-1.0, 2.0), GroupPoint(0.0, 1.0)}) {
      CHECK(m1.p_t_direct(t, z) == doctest::Approx(hyperbolic_kernel(t, cc_distance(identity(), z))).epsilon(1e-14));
      CHECK(p_t_chi(m1, t, z) == doctest::Approx(m1.p_t_direct(t, z)).epsilon(1e-7));
    }
  // p_t^gamma = e^{-t gamma^2/4} p_t delta^{-gamma/2}, p_t = e^{t/4} h_t delta^{1/2}
  for (double gamma : {0.0, 2.0, -0.5}) {
    HeatKernelModel m(gamma);
    const GroupPoint z(0.4, 1.7);
    const double t = 0.3;
    const double pt = std::exp(t / 4) * hyperbolic_kernel(t, cc_distance(identity(), z)) * std::sqrt(modular(z));
    const double expect = std::exp(-t * gamma * gamma / 4) * pt * std::pow(modular(z), -gamma / 2);
    CHECK(m.p_t_direct(t, z) == doctest::Approx(expect).epsilon(1e-13));
    // table interpolation tolerance
    double worst = 0;
    for (double r = 0.0; r < 6; r += 0.0137)
      worst = std::max(worst, std::abs((*m.table(t))(r) / hyperbolic_kernel(t, r) - 1.0));
    CHECK(worst < 1e-7);
  }
  CHECK_THROWS_AS(m1.p_t(0.0, identity()), DomainError);
}

TEST_CASE("mass of the drifted kernels") {
  for (double gamma : {0.0, 1.0, 2.0})
    for (double t : {0.1, 0.5, 1.0}) CHECK(std::abs(heat_mass(t, gamma) - 1.0) <= 1e-3);
}

TEST_CASE("mass of the drifted kernels by (x, s) quadrature") {
  // independent of the polar formula used by heat_mass
  for (double gamma : {0.0, 2.0}) {
    const double t = 0.1;
    HeatKernelModel m(gamma, 8.0);
    auto row = [&](double s) {
      return oracle::simpson([&](double x) { return m.p_t(t, GroupPoint::from_s(x, s)); }, -4.0 * std::exp(s),
                             4.0 * std::exp(s), 800);
    };
    const double mass = oracle::simpson(row, -3.0, 3.0, 600);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("heat semigroup on the grid") {
  const GridSpec g(-6, 6, -3, 3, 97, 81);
  const Field f = sample([](const GroupPoint& p) { return bump(p, 0.2, 0.1, 0.6); }, g);
  const Field h = sample([](const GroupPoint& p) { return bump(p, -0.4, -0.3, 0.5) * (1.2 + p.x); }, g);
  for (double gamma : {0.0, 1.0, 2.0}) {
    const MeasureTag mu = MeasureTag::Mu(gamma);
    // self-adjointness
    const double l = inner(heat_apply(f, 0.2, gamma), h, mu), r = inner(f, heat_apply(h, 0.2, gamma), mu);
    CHECK(l == doctest::Approx(r).epsilon(1e-4));
    // semigroup
    const Field two = heat_apply(heat_apply(f, 0.1, gamma), 0.15, gamma);
    const Field one = heat_apply(f, 0.25, gamma);
    CHECK(lp_norm(two - one, 2, mu) <= 1e-2 * lp_norm(f, 2, mu));
    // strong continuity
    double prev = 1e9;
    for (double t : {0.2, 0.1, 0.05}) {
      const double d = lp_norm(heat_apply(f, t, gamma) - f, 2, mu);
      CHECK(d < prev);
      prev = d;
    }
    // contraction
    const Field Pf = heat_apply(f, 0.3, gamma);
    for (double p : {1.0, 2.0, 4.0, double(INFINITY)}) CHECK(lp_norm(Pf, p, mu) <= (1 + 1e-3) * lp_norm(f, p, mu));
    // positivity of the output for positive data
    CHECK(Pf.values.minCoeff() >= -1e-10);
  }
}

TEST_CASE("constants are preserved away from the boundary") {
  const GridSpec g(-6, 6, -3, 3, 97, 81);
  Field one(g);
  one.values.setOnes();
  for (double gamma : {0.0, 1.0, 2.0}) {
    const Field P = heat_apply(one, 0.1, gamma);
    for (int j = 30; j <= 50; ++j)
      for (int i = 40; i <= 56; ++i) CHECK(std::abs(P.values(i, j) - 1.0) < 1e-3);
    ConvDiagnostics d;
    const Field small = sample([](const GroupPoint& p) { return bump(p, 0, 0, 0.3); }, g);
    heat_apply(small, 0.1, gamma, &d);
    CHECK(d.truncation_mass < 1e-3);
  }
}

TEST_CASE("kernel positivity on grids") {
  const GridSpec g(-4, 4, -3, 3, 33, 33);
  for (double gamma : {0.0, 1.0, 2.0}) {
    HeatKernelModel m(gamma, grid_diameter(g) + 0.5);
    const Field p = sample([&](const GroupPoint& z) { return m.p_t(0.5, z); }, g);
    CHECK(p.values.minCoeff() > 0.0);
  }
}

TEST_CASE("envelope fit on the Gauss kernel of the line") {
  std::vector<EnvelopeSample> samples;
  for (double t : {0.1, 0.3, 0.6, 1.0})
    for (double x = -5; x <= 5; x += 0.05)
      samples.push_back({t, x * x, -0.5 * std::log(4 * std::numbers::pi * t) - x * x / (4 * t)});
  const KernelBoundCertificate c = fit_envelope(samples, 0.5);
  CHECK(c.success);
  CHECK(c.b == doctest::Approx(0.25));
  CHECK(std::abs(c.omega) < 1e-9);
  CHECK(c.prefactor == doctest::Approx(1 / std::sqrt(4 * std::numbers::pi)).epsilon(1e-9));
  CHECK(c.max_violation <= 1e-10);
}

TEST_CASE("Gaussian bound certificates") {
  const std::vector<double> ts{0.05, 0.1, 0.25, 0.5, 1.0};
  std::vector<KernelBoundCertificate> c0;
  for (double gamma : {0.0, 1.0, 2.0}) {
    HeatKernelModel m(gamma);
    for (int order : {0, 1}) {
      const KernelBoundCertificate c = certify_gaussian_bound(m, ts, order, 49);
      INFO("gamma " << gamma << " m " << order << " " << c.detail);
      CHECK(c.success);
      CHECK(c.b >= 0.2);
      CHECK(c.max_violation <= 0.0 + 1e-10);
      CHECK(c.quadratic_r2 >= 0.99);
      if (order == 0) c0.push_back(c);
    }
  }
  // once chi^{1/2} is removed, gamma = 0 and gamma = 2 differ by e^{t (gamma_0^2 - gamma_2^2) / 4} = e^{-t}
  CHECK(c0[0].b == doctest::Approx(c0[2].b));
  CHECK(c0[0].prefactor == doctest::Approx(c0[2].prefactor).epsilon(1e-6));
  CHECK(c0[0].omega - c0[2].omega == doctest::Approx(1.0).epsilon(1e-6));
  HeatKernelModel m(0.0);
  CHECK_THROWS_AS(certify_gaussian_bound(m, {0.5, 3.0}, 0), ParameterError);
}

TEST_CASE("kernel table export") {
  HeatKernelModel m(1.0, 4.0);
  const auto path = (std::filesystem::temp_directory_path() / "driftlab_kernel.csv").string();
  export_kernel_csv(m, {0.1, 0.5}, path);
  std::ifstream is(path);
  std::string header, line;
  std::getline(is, header);
  CHECK(header == "t,r,value");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows > 100);
  std::filesystem::remove(path);
}
