#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlab/errors.hpp"
#include "driftlab/group.hpp"
#include "oracles.hpp"

#include <random>

using namespace driftlab;

namespace {
GroupPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> x(-3.0, 3.0), s(-2.0, 2.0);
  return GroupPoint::from_s(x(rng), s(rng));
}
}  // namespace

TEST_CASE("product law and inverse") {
  const GroupPoint p = multiply({1, 2}, {3, 4});
  CHECK(p.x == 7.0);
  CHECK(p.a == 8.0);
  const GroupPoint q = multiply(identity(), {5, 3});
  CHECK(q.x == 5.0);
  CHECK(q.a == 3.0);
  const GroupPoint inv = inverse({1, 2});
  CHECK(inv.x == -0.5);
  CHECK(inv.a == 0.5);
  CHECK(inverse(identity()).x == 0.0);
  CHECK(inverse(identity()).a == 1.0);
  CHECK_THROWS_AS(GroupPoint(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(GroupPoint(1.0, -1.0), DomainError);
}

TEST_CASE("group laws on random triples") {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const GroupPoint p = random_point(rng), q = random_point(rng), r = random_point(rng);
    const GroupPoint l = multiply(multiply(p, q), r), rr = multiply(p, multiply(q, r));
    worst = std::max({worst, std::abs(l.x - rr.x) / (1 + std::abs(l.x)), std::abs(l.a - rr.a) / l.a});
    const GroupPoint e1 = multiply(p, inverse(p)), e2 = multiply(inverse(p), p);
    worst = std::max({worst, std::abs(e1.x), std::abs(e1.a - 1), std::abs(e2.x), std::abs(e2.a - 1)});
    const GroupPoint pp = inverse(inverse(p));
    worst = std::max({worst, std::abs(pp.x - p.x) / (1 + std::abs(p.x)), std::abs(pp.a - p.a) / p.a});
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("modular function and characters") {
  CHECK(modular({0, 2}) == doctest::Approx(0.5));
  CHECK(modular(identity()) == 1.0);
  CHECK(modular(multiply({1, 2}, {3, 4})) == doctest::Approx(0.125));
  CHECK(modular({3, 5}, GroupKind::Line) == 1.0);
  CHECK(character_eval(0.0, {2, 7}) == 1.0);
  CHECK(character_eval(2.0, {5, 4}) == doctest::Approx(1.0 / 16));
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const GroupPoint p = random_point(rng), q = random_point(rng);
    CHECK(character_eval(1.0, p) == doctest::Approx(modular(p)).epsilon(1e-14));
    for (double g : {-2.0, -0.5, 0.7, 2.0}) {
      const double lhs = character_eval(g, multiply(p, q)), rhs = character_eval(g, p) * character_eval(g, q);
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("drift data against a finite-difference derivative along X0") {
  for (double g : {1.0, 0.0, -2.0, 0.6}) {
    // X0 = a d/da at e, i.e. d/ds of e^{-gamma s} at s = 0
    const double h = 1e-5;
    const double fd = (std::exp(-g * h) - std::exp(g * h)) / (2 * h);
    const DriftData d = drift_data(g);
    CHECK(d.c0 == doctest::Approx(fd).epsilon(1e-8));
    CHECK(d.c1 == 0.0);
    CHECK(d.bX == doctest::Approx(std::abs(g) / 2));
  }
  CHECK(drift_data(1.0).c0 == -1.0);
  CHECK(drift_data(-2.0).bX == 1.0);
}

TEST_CASE("distance against geodesic shooting") {
  CHECK(cc_distance(identity(), identity()) == 0.0);
  double xe, ae;
  const double vertical = oracle::shoot(std::numbers::pi / 2, [](double, double a) { return a >= std::exp(2.0); }, xe, ae);
  CHECK(vertical == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(cc_distance(identity(), {0, std::exp(2.0)}) == doctest::Approx(2.0).epsilon(1e-14));
  const double level = oracle::geodesic_distance_level(1.0);
  CHECK(level == doctest::Approx(0.96242365).epsilon(1e-4));
  CHECK(cc_distance(identity(), {1, 1}) == doctest::Approx(std::acosh(1.5)).epsilon(1e-14));
  CHECK(cc_distance(identity(), {1, 1}) == doctest::Approx(level).epsilon(1e-4));
  CHECK(cc_distance({1.0, 0.0 + 1.0}, {4.0, 1.0}, GroupKind::Line) == 3.0);
}

TEST_CASE("left invariance and local doubling of characters") {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const GroupPoint g = random_point(rng), p = random_point(rng), q = random_point(rng);
    worst = std::max(worst, std::abs(cc_distance(multiply(g, p), multiply(g, q)) - cc_distance(p, q)));
  }
  CHECK(worst <= 1e-9);

  const double R = 1.0;
  for (double gamma : {-2.0, 0.5, 2.0}) {
    double ratio = 0.0;
    for (int k = 0; k < 5000; ++k) {
      const GroupPoint p = random_point(rng), q = random_point(rng);
      if (cc_distance(p, q) > R) continue;
      ratio = std::max(ratio, character_eval(gamma, p) / character_eval(gamma, q));
    }
    CHECK(ratio <= std::exp(std::abs(gamma) * R * (1 + 1e-6)));
  }
}

TEST_CASE("ball volumes") {
  const double v1 = ball_volume(0.05, MeasureTag::Rho()) / (0.05 * 0.05);
  const double v2 = ball_volume(0.1, MeasureTag::Rho()) / (0.1 * 0.1);
  const double v3 = ball_volume(0.2, MeasureTag::Rho()) / (0.2 * 0.2);
  CHECK(std::max({v1, v2, v3}) / std::min({v1, v2, v3}) < 1.1);

  // lambda-area by a 2-D Simpson oracle over the ball in (x, a)
  for (double r : {0.3, 1.0, 2.0}) {
    auto row = [r](double a) {
      // |x| <= sqrt(2 a (cosh r - (a + 1/a)/2))
      const double w = 2.0 * a * (std::cosh(r) - 0.5 * (a + 1.0 / a));
      return w > 0 ? 2.0 * std::sqrt(w) / (a * a) : 0.0;
    };
    const double area = oracle::adaptive_simpson(row, std::exp(-r), std::exp(r), 1e-10);
    CHECK(area == doctest::Approx(2 * std::numbers::pi * (std::cosh(r) - 1)).epsilon(1e-3));
    CHECK(ball_volume(r, MeasureTag::Lambda()) == doctest::Approx(area).epsilon(1e-4));
    CHECK(ball_volume(r, MeasureTag::Mu(0.0)) == doctest::Approx(ball_volume(r, MeasureTag::Rho())).epsilon(1e-14));
  }
  CHECK(ball_volume(0.7, MeasureTag::Rho(), GroupKind::Line) == 1.4);
  CHECK_THROWS_AS(ball_volume(50.0, MeasureTag::Rho()), TruncationError);
  CHECK_THROWS_AS(ball_volume(0.0, MeasureTag::Rho()), DomainError);
}

TEST_CASE("growth of character mass on balls is at most exponential") {
  for (double gamma : {0.0, 1.0, 2.0}) {
    std::vector<double> r, logv;
    for (double rr = 1.0; rr <= 3.0001; rr += 0.25) {
      r.push_back(rr);
      // int_{B_r} chi drho = mu(gamma)-volume
      logv.push_back(std::log(ball_volume(rr, MeasureTag::Mu(gamma))));
    }
    // least-squares line
    const double n = static_cast<double>(r.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      sx += r[k]; sy += logv[k]; sxx += r[k] * r[k]; sxy += r[k] * logv[k];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icpt = (sy - slope * sx) / n;
    for (std::size_t k = 0; k < r.size(); ++k)
      CHECK(logv[k] <= (slope * r[k] + icpt) + 0.05 * std::abs(slope * r[k] + icpt) + 1e-12);
  }
}

TEST_CASE("polar coordinates") {
  for (double r : {0.2, 1.0, 3.0})
    for (double th : {0.3, 2.0, 4.5}) CHECK(cc_distance(identity(), polar_point(r, th)) == doctest::Approx(r).epsilon(1e-12));
  // A_1 integrates a over a circle; lambda-area check: int_0^r sinh r A_0 = 2 pi (cosh r - 1)
  CHECK(angular_moment(1.3, 0.0) == doctest::Approx(2 * std::numbers::pi));
  // rho-circumference weight: A_1(r) = 2 pi cosh r ... check against Simpson
  const double ref = oracle::simpson([](double th) { return 1.0 / (std::cosh(1.3) - std::sinh(1.3) * std::cos(th)); }, 0,
                                     2 * std::numbers::pi, 4000);
  CHECK(angular_moment(1.3, 1.0) == doctest::Approx(ref).epsilon(1e-10));
}
