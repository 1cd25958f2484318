#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlab/bessel.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/line.hpp"
#include "oracles.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <numbers>

using namespace driftlab;

namespace {

// Bessel potential of the line from its classical Macdonald-function form
double line_bessel_oracle(double alpha, double c, double x) {
  const double nu = 0.5 * (alpha - 1.0), r = std::abs(x);
  return std::pow(r / (2.0 * std::sqrt(c)), nu) * boost::math::cyl_bessel_k(nu, std::sqrt(c) * r) /
         (std::sqrt(std::numbers::pi) * std::tgamma(0.5 * alpha));
}

double bump(const GroupPoint& p) {
  return std::exp(-(p.x * p.x + p.s() * p.s()) / 0.5);
}

}  // namespace

TEST_CASE("line heat table reproduces the Gauss kernel") {
  CHECK(line::gauss_kernel(1.0, 0.0) == doctest::Approx(0.28209479177387814).epsilon(1e-12));
  line::LineHeatModel M(12.0);
  CHECK(std::abs(M.p_t(1.0, 0.0) - 0.28209479177) < 1e-8);
  for (double t : {0.05, 0.1, 0.5, 1.0, 2.0}) {
    double worst = 0.0;
    for (double x = -5.0; x <= 5.0; x += 0.0137) {
      const double ref = std::exp(-x * x / (4 * t)) / std::sqrt(4 * std::numbers::pi * t);
      if (ref < 1e-300) continue;
      worst = std::max(worst, std::abs(M.p_t(t, x) / ref - 1.0));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("line convolution: FFT path, direct path and Fourier oracle agree") {
  const line::LineGrid g(-12.0, 12.0, 481);
  const auto f = line::sample([](double x) { return std::exp(-x * x) * (1.0 + 0.3 * x); }, g);
  const double t = 0.3;
  line::LineKernelOperator op([t](double x) { return line::gauss_kernel(t, x); }, g, 1.0);
  const auto a = op.apply(f), b = op.apply_direct(f);
  CHECK((a.values - b.values).abs().maxCoeff() < 1e-12);
  const auto heat = line::heat_apply(f, t);
  const auto four = line::fourier_multiplier(f, [t](double xi) { return std::exp(-t * xi * xi); });
  CHECK((heat.values - four.values).abs().maxCoeff() < 1e-6);
  CHECK(line::integrate(heat) == doctest::Approx(line::integrate(f)).epsilon(1e-8));
  CHECK(op.truncation_mass(f) < 1e-8);
}

TEST_CASE("line derivatives and generator") {
  const line::LineGrid g(-6.0, 6.0, 601);
  const auto f = line::sample([](double x) { return std::exp(-x * x); }, g);
  const auto d1 = line::derivative(f, 1), d2 = line::derivative(f, 2);
  const auto L = line::generator_apply(f, 1.0);
  double e1 = 0, e2 = 0, eL = 0;
  for (int i = 0; i < g.n; ++i) {
    const double x = g.x(i), E = std::exp(-x * x);
    e1 = std::max(e1, std::abs(d1.values(i) + 2 * x * E));
    e2 = std::max(e2, std::abs(d2.values(i) - (4 * x * x - 2) * E));
    eL = std::max(eL, std::abs(L.values(i) - (-(4 * x * x - 2) * E + E)));
  }
  CHECK(e1 < 1e-3);
  CHECK(e2 < 2e-3);
  CHECK(eL < 1e-3);
}

TEST_CASE("line Bessel kernel by subordination against the Macdonald-function oracle") {
  for (double alpha : {0.5, 1.0, 1.5, 2.0, 3.0})
    for (double c : {0.5, 2.0})
      for (double x : {1e-3, 0.05, 0.4, 1.0, 3.0, 8.0}) {
        const double ref = line_bessel_oracle(alpha, c, x);
        CHECK(line::bessel_kernel(alpha, c, x) == doctest::Approx(ref).epsilon(1e-5));
        CHECK(line::bessel_kernel_closed(alpha, c, x) == doctest::Approx(ref).epsilon(1e-10));
      }
  // alpha = 2: e^{-sqrt(c)|x|} / (2 sqrt c)
  for (double x : {0.1, 1.0, 4.0})
    CHECK(line::bessel_kernel(2.0, 3.0, x) == doctest::Approx(std::exp(-std::sqrt(3.0) * x) / (2 * std::sqrt(3.0))).epsilon(1e-5));
}

TEST_CASE("line Bessel potential against the Fourier multiplier") {
  const line::LineGrid g(-20.0, 20.0, 2049);
  const auto f = line::sample([](double x) { return std::exp(-x * x / 2) * std::cos(x); }, g);
  for (double alpha : {0.5, 1.0, 2.0}) {
    const double c = 1.5;
    const auto B = line::bessel_apply(f, alpha, c);
    const auto F = line::fourier_multiplier(f, [=](double xi) { return std::pow(xi * xi + c, -0.5 * alpha); });
    CHECK((B.values - F.values).abs().maxCoeff() < 1e-4 * F.values.abs().maxCoeff());
  }
}

TEST_CASE("subordination small-t pieces") {
  // Gamma(s, x) recursion against the defining integral
  for (double s : {-1.5, -1.0, -0.25, 0.0, 0.5, 1.0})
    for (double x : {0.3, 2.0}) {
      const double ref = oracle::adaptive_simpson([s](double u) { return u <= 0 ? 0.0 : std::pow(u, s - 1) * std::exp(-u); }, x, x + 60.0, 1e-13);
      CHECK(upper_gamma(s, x) == doctest::Approx(ref).epsilon(1e-9));
    }
  const auto& G = subordination_grid();
  CHECK(G.t(0) == doctest::Approx(1e-6));
  CHECK(G.t(G.n - 1) >= 400.0);
}

TEST_CASE("ax+b Bessel kernel against brute-force subordination of the McKean oracle") {
  const BesselParams P{1.0, 0.0, 2.0};
  BesselKernelModel M(P, 4.0);
  const double c_eff = P.c - 0.25;
  for (double r : {0.3, 1.0, 2.0}) {
    // tau = ln t, Simpson on [-14, 5]
    const double ref = oracle::simpson(
                           [&](double tau) {
                             const double t = std::exp(tau);
                             return std::pow(t, 0.5 * P.alpha) * std::exp(-c_eff * t) * oracle::mckean(t, r);
                           },
                           -14.0, 5.0, 760) /
                       std::tgamma(0.5 * P.alpha);
    CHECK(M.radial_direct(r) == doctest::Approx(ref).epsilon(1e-5));
    CHECK((*M.table())(r) == doctest::Approx(ref).epsilon(1e-5));
  }
}

TEST_CASE("ax+b Bessel kernel: local power, exponential decay and total mass") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    BesselKernelModel M({alpha, 0.0, 2.0}, 6.0);
    const double r1 = 1e-3, r2 = 1e-2;
    const double slope = std::log(M.radial_direct(r2) / M.radial_direct(r1)) / std::log(r2 / r1);
    CHECK(std::abs(slope - (alpha - 2.0)) < 0.1 * std::abs(alpha - 2.0));
  }
  for (double gamma : {0.0, 1.0, 2.0}) {
    // at gamma = 2 and c = 1 the mass integrand only decays like e^{(1 - sqrt 2) r}
    const BesselParams P{1.0, gamma, gamma == 2.0 ? 3.0 : c_min(gamma)};
    BesselKernelModel M(P, 14.0);
    // max over directions of log(G chi^{1/2}) decreases at least linearly for |z| > 1
    std::vector<double> rs, ls;
    for (double r = 1.0; r <= 4.0; r += 0.25) {
      double best = -1e300;
      for (int k = 0; k < 64; ++k) {
        const GroupPoint z = polar_point(r, 2 * std::numbers::pi * k / 64);
        best = std::max(best, std::log(M(z) * std::sqrt(character_eval(gamma, z))));
      }
      rs.push_back(r);
      ls.push_back(best);
    }
    double mr = 0, ml = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) mr += rs[i], ml += ls[i];
    mr /= rs.size(), ml /= rs.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) num += (rs[i] - mr) * (ls[i] - ml), den += (rs[i] - mr) * (rs[i] - mr);
    CHECK(num / den < -0.1);
    // int G drho = c^{-alpha/2}: polar form int g(r) sinh r A_{beta + 1}(r) dr
    const double beta = M.beta();
    const double mass = oracle::adaptive_simpson(
        [&](double r) { return r <= 0 ? 0.0 : (*M.table())(r) * std::sinh(r) * angular_moment(r, beta + 1.0); }, 0.0, 14.0, 1e-8);
    CHECK(mass == doctest::Approx(M.mass()).epsilon(2e-3));
  }
}

TEST_CASE("Bessel parameters below the certified floor are refused") {
  const double w = certified_omega(0.0);
  CHECK(w > 0.0);
  CHECK(c_min(0.0) == doctest::Approx(w + 1.0));
  CHECK_THROWS_AS(BesselKernelModel({1.0, 0.0, 0.5 * w}), DomainError);
  CHECK_THROWS_AS(BesselKernelModel({0.0, 0.0, 2.0}), ParameterError);
  CHECK_NOTHROW(BesselKernelModel({1.0, 2.0, 0.5}));  // omega(2) < 0
}

TEST_CASE("Bessel potentials on the grid: small order, composition") {
  const GridSpec g(-3.0, 3.0, -2.5, 2.5, 65, 65);
  const Field f = sample(bump, g);
  const MeasureTag mu = MeasureTag::Mu(0.0);
  const double c = c_min(0.0);
  const Field small = bessel_apply(f, {0.05, 0.0, c});
  CHECK(lp_norm(small - f, 2, mu) < 0.05 * lp_norm(f, 2, mu));
  // B(0.5) B(1) = B(1.5) up to the mass the truncated operators lose at the edges:
  // the defect is small and shrinks on a wider rectangle
  auto composition_defect = [&](const GridSpec& gg) {
    const Field ff = sample(bump, gg);
    const Field a = bessel_apply(bessel_apply(ff, {0.5, 0.0, c}), {1.0, 0.0, c});
    const Field b = bessel_apply(ff, {1.5, 0.0, c});
    return lp_norm(a - b, 2, mu) / lp_norm(b, 2, mu);
  };
  const double narrow = composition_defect(g);
  CHECK(narrow < 1e-2);
  CHECK(composition_defect(GridSpec(-6.0, 6.0, -2.5, 2.5, 129, 65)) < 0.8 * narrow);
  CHECK(bessel_apply(f, {0.0, 0.0, c}).values.isApprox(f.values));
  // the alpha = 1 kernel has a long tail: a sizeable share of its mass lies off a
  // 6 x 5 rectangle, and the diagnostic shrinks as the rectangle widens
  ConvDiagnostics small_box, big_box;
  bessel_apply(f, {1.0, 0.0, c}, &small_box);
  bessel_apply(sample(bump, GridSpec(-6.0, 6.0, -2.5, 2.5, 129, 65)), {1.0, 0.0, c}, &big_box);
  CHECK(small_box.truncation_mass > 0.0);
  CHECK(small_box.truncation_mass < 1.0);
  CHECK(big_box.truncation_mass < small_box.truncation_mass);
}
