#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlab/embeddings.hpp"
#include "driftlab/errors.hpp"
#include "oracles.hpp"

#include <numbers>

using namespace driftlab;

namespace {

const double inf = std::numeric_limits<double>::infinity();

FamilyMember unit_bump() {
  return {"bump", [](const GroupPoint& p) {
            const double s = p.s();
            return std::exp(-2.0 * (p.x * p.x + s * s));
          }};
}

double gauss_lq(double sigma, double q) {
  // || e^{-x^2 / 2 sigma^2} ||_{L^q(R)}
  return std::pow(sigma * std::sqrt(2.0 * std::numbers::pi / q), 1.0 / q);
}

}  // namespace

TEST_CASE("embedding hypotheses are classified and violations refused") {
  CHECK(classify({2.0, 4.0, 1.0, 1.0}) == 'b');
  CHECK(classify({2.0, 4.0, 0.5, 1.0}) == 'a');
  CHECK(classify({2.0, 4.0, 0.6, 0.0}) == 'a');
  CHECK(classify({2.0, inf, 1.5, 1.0}) == 'c');
  CHECK(classify({2.0, 2.0, 0.0, 1.0}) == 'i');
  CHECK_THROWS_AS(classify({2.0, 4.0, 0.4, 1.0}), ParameterError);  // 1/4 > 0.4/2
  CHECK_THROWS_AS(classify({4.0, 2.0, 1.0, 1.0}), ParameterError);  // q < p
  CHECK_THROWS_AS(classify({2.0, inf, 1.0, 1.0}), ParameterError);  // alpha = d/p
  CHECK_THROWS_AS(classify({1.0, 2.0, 1.0, 1.0}), ParameterError);
  CHECK_THROWS_AS(embedding_ratio_scan({2.0, 8.0, 0.2, 1.0}, standard_family(), battery_grid(17)), ParameterError);
  // target measure mu of delta^{gamma q/p + 1 - q/p}
  CHECK(EmbeddingCase{2.0, 4.0, 1.0, 0.0}.target_gamma() == doctest::Approx(-1.0));
  CHECK(EmbeddingCase{2.0, 4.0, 1.0, 1.0}.target_gamma() == doctest::Approx(1.0));
}

TEST_CASE("identity embedding has ratio one") {
  const auto R = embedding_ratio_scan({2.0, 2.0, 0.0, 1.0}, standard_family(), battery_grid(25));
  CHECK(R.values["max_ratio"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(R.pass());
}

TEST_CASE("embedding ratios are finite and refinement-stable on the lambda battery") {
  const auto fam = standard_family();
  for (const auto& c : embedding_battery(1.0)) {
    const auto R = embedding_ratio_scan(c, fam, battery_grid(33));
    INFO(R.to_json().dump());
    CHECK(R.pass());
    CHECK(R.values["max_ratio"].get<double>() > 0.0);
  }
}

TEST_CASE("weighted embeddings for gamma != 1") {
  const auto fam = standard_family();
  for (double gamma : {0.0, 2.0}) {
    const auto Ra = embedding_ratio_scan({2.0, 4.0, 1.0, gamma}, fam, battery_grid(33));
    const auto Rc = embedding_ratio_scan({2.0, inf, 1.5, gamma}, fam, battery_grid(33));
    INFO(Ra.to_json().dump());
    INFO(Rc.to_json().dump());
    CHECK(Ra.pass());
    CHECK(Rc.pass());
  }
}

TEST_CASE("Bessel kernel integrability threshold on ax+b") {
  for (double r : {1.5, 2.0, 3.0}) {
    const auto R = bessel_integrability_scan(0.0, 0.0, r, threshold_bracket(r));
    INFO(R.to_json().dump());
    CHECK(R.pass());
    const double star = 2.0 * (r - 1.0) / r;
    CHECK(R.values["finite_edge"].get<double>() == doctest::Approx(star + 0.1));
    CHECK(R.values["divergent_edge"].get<double>() == doctest::Approx(star - 0.1));
    // the cut increments see the local power |x|^{r(alpha - 2)} t dt
    for (const auto& row : R.rows) CHECK(std::abs(row[4] - (r * (row[0] - 2.0) + 1.0)) < 0.01);
  }
  const auto R = bessel_integrability_scan(0.0, 0.0, 2.0, {0.7, 1.3});
  CHECK(R.rows[0][5] == 0.0);
  CHECK(R.rows[0][3] >= 2.0);
  CHECK(R.rows[1][5] == 1.0);
  CHECK(std::isfinite(R.rows[1][1]));
  // weights delta^a chi^s only change the behaviour at infinity
  IntegrabilityOptions o;
  o.gamma = 1.0;
  o.c = 6.0;
  CHECK(bessel_integrability_scan(0.3, -0.2, 2.0, threshold_bracket(2.0), o).pass());
  CHECK_THROWS_AS(bessel_integrability_scan(0.0, 0.0, 1.0, {1.0}), ParameterError);
}

TEST_CASE("L2 norm of the gamma = 1 Bessel kernel equals G_{2 alpha}(e)") {
  // chi = delta makes G even, G(z^{-1}) = G(z), so int G_alpha^2 drho = G_alpha * G_alpha (e) = G_{2 alpha}(e)
  const double alpha = 1.3, c = 4.0;
  IntegrabilityOptions o;
  o.gamma = 1.0;
  o.c = c;
  const auto R = bessel_integrability_scan(0.0, 0.0, 2.0, {alpha}, o);
  const double norm = R.rows[0][1];
  // G_{2 alpha}(e) = Gamma(alpha)^{-1} int t^{alpha - 1} e^{-ct} h_t(0) dt, tau = ln t; below
  // t0 = e^{-16}, h_t(0) = (4 pi t)^{-1} (1 + O(t))
  const double t0 = std::exp(-16.0);
  const double g2 = (oracle::simpson(
                         [&](double tau) {
                           const double t = std::exp(tau);
                           return std::pow(t, alpha) * std::exp(-c * t) * oracle::mckean(t, 0.0);
                         },
                         -16.0, 3.0, 380) +
                     std::pow(t0, alpha - 1.0) / (4.0 * std::numbers::pi * (alpha - 1.0))) /
                    std::tgamma(alpha);
  CHECK(norm * norm == doctest::Approx(g2).epsilon(2e-3));
}

TEST_CASE("line Bessel kernel L2 norm against the Fourier closed form") {
  IntegrabilityOptions o;
  o.kind = GroupKind::Line;
  const double c = o.c;
  const auto R = bessel_integrability_scan(0.0, 0.0, 2.0, {0.3, 0.45, 0.55, 0.7, 1.0, 1.5}, o);
  CHECK(R.pass());
  for (const auto& row : R.rows) {
    const double alpha = row[0];
    if (alpha <= 0.5) {
      CHECK(row[5] == 0.0);
      continue;
    }
    // (2 pi)^{-1} int (xi^2 + c)^{-alpha} dxi
    const double ref = std::sqrt(std::pow(c, 0.5 - alpha) * std::tgamma(alpha - 0.5) /
                                 (2.0 * std::sqrt(std::numbers::pi) * std::tgamma(alpha)));
    CHECK(row[1] == doctest::Approx(ref).epsilon(1e-3));
  }
}

TEST_CASE("Young's inequalities on seeded random pairs") {
  const auto R = young_battery(11, 18, young_grid(49));
  INFO(R.to_json().dump());
  CHECK(R.pass());
  CHECK(R.values["max_conv_edge_ratio"].get<double>() < 1e-2);
  CHECK(R.values["max_ratio"].get<double>() <= 1.05);
}

TEST_CASE("Young's inequality: exponents and inputs are validated") {
  const GridSpec g = young_grid(25);
  const Field f = sample([](const GroupPoint& p) { return std::exp(-4 * (p.x * p.x + p.s() * p.s())); }, g);
  CHECK_THROWS_AS(young_check(f, f, 2.0, 4.0, 2.0), ParameterError);
  CHECK_THROWS_AS(young_check(f, f, 4.0, 2.0), ParameterError);
  CHECK_THROWS_AS(young_check(-1.0 * f, f, 2.0, 2.0), ParameterError);
  CHECK_NOTHROW(young_check(f, f, 2.0, 4.0, 4.0 / 3.0));
  CHECK(young_check(f, f, 2.0, inf).params["r"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("Young with an approximate identity") {
  const GridSpec g = young_grid(97);
  const Field f = sample([](const GroupPoint& p) { return std::exp(-2 * (p.x * p.x + p.s() * p.s())); }, g);
  Field phi = sample([](const GroupPoint& p) { return std::exp(-40 * (p.x * p.x + p.s() * p.s())); }, g);
  phi = (1.0 / integrate(phi, MeasureTag::Rho())) * phi;
  const auto R = young_check(f, phi, 2.0, 2.0);
  CHECK(R.pass());
  const double fq = lp_norm(f, 2.0, MeasureTag::Lambda());
  CHECK(R.values["lhs"].get<double>() == doctest::Approx(fq).epsilon(0.05));
  CHECK(R.values["rhs"].get<double>() >= 0.97 * fq);
  CHECK(R.values["reflection_defect"].get<double>() < 0.05);
}

TEST_CASE("Young on the line against Gaussian closed forms") {
  const line::LineGrid g(-20.0, 20.0, 2001);
  const double a = 0.7, b = 1.3;
  const auto f = line::sample([&](double x) { return std::exp(-x * x / (2 * a * a)); }, g);
  const auto h = line::sample([&](double x) { return std::exp(-x * x / (2 * b * b)); }, g);
  const double sab = std::sqrt(a * a + b * b), amp = std::sqrt(2 * std::numbers::pi) * a * b / sab;
  for (auto [p, q] : {std::pair{1.5, 1.5}, {2.0, 4.0}, {1.5, 3.0}, {2.0, inf}}) {
    const auto R = line::young_check(f, h, p, q);
    CHECK(R.pass());
    const double lhs = std::isinf(q) ? amp : amp * gauss_lq(sab, q);
    CHECK(R.values["lhs"].get<double>() == doctest::Approx(lhs).epsilon(1e-6));
    const double r = R.params["r"].get<double>();
    // the reflection of an even g is g itself, so the mixed factor is ||g||_r
    const double rhs = gauss_lq(a, p) * gauss_lq(b, r);
    CHECK(R.values["rhs"].get<double>() == doctest::Approx(rhs).epsilon(1e-6));
  }
  const auto odd = line::sample([](double x) { return x > 0 ? std::exp(-x) * x : 0.0; }, g);
  CHECK(line::reflect(odd).values(0) == doctest::Approx(odd.values(g.n - 1)));
  CHECK_THROWS_AS(line::convolve(line::sample([](double) { return 1.0; }, line::LineGrid(0.0, 1.0, 9)),
                                 line::sample([](double) { return 1.0; }, line::LineGrid(0.0, 1.0, 9))),
                  ParameterError);
}

TEST_CASE("translation identity: exact character factor") {
  const GridSpec g = translation_grid();
  const auto f = unit_bump();
  // gamma = 1: the factor is 1
  auto R = translation_scaling_identity(f, GroupPoint(0.5, 1.6), 2.0, 3.0, 1.0, g);
  CHECK(R.values["factor_q"].get<double>() == doctest::Approx(1.0));
  CHECK(R.pass());
  // gamma = 0, y = (0, 2): (chi delta^{-1})(y) = 2
  R = translation_scaling_identity(f, GroupPoint(0.0, 2.0), 2.0, 2.0, 0.0, g);
  CHECK(R.values["factor_q"].get<double>() == doctest::Approx(std::sqrt(2.0)));
  CHECK(R.pass());
  SeededStream rng(5);
  for (int k = 0; k < 20; ++k) {
    const GroupPoint y(rng.uniform(-1.0, 1.0), std::exp(rng.uniform(-0.8, 0.8)));
    const double q = rng.uniform(1.2, 4.0), gamma = rng.uniform(-1.0, 3.0);
    const auto S = translation_scaling_identity(f, y, 2.0, q, gamma, g);
    INFO(S.to_json().dump());
    CHECK(S.pass());
    CHECK(S.values["factor_q"].get<double>() == doctest::Approx(std::pow(y.a, (1.0 - gamma) / q)));
  }
  CHECK_THROWS_AS(translation_scaling_identity(f, GroupPoint(7.5, 1.0), 2.0, 2.0, 0.0, g), TruncationError);
}

TEST_CASE("translation obstruction: the embedding constant scales like a power of a") {
  const GridSpec g = translation_grid();
  std::vector<double> as;
  for (double l = -1.0; l <= 1.0 + 1e-9; l += 0.25) as.push_back(std::exp(l));
  const auto R = translation_obstruction_scan(unit_bump(), 2.0, 4.0, 0.0, as, g);
  CHECK(R.pass());
  CHECK(R.values["slope"].get<double>() == doctest::Approx(-0.25).epsilon(0.08));
  // chi = delta: no obstruction
  const auto F = translation_obstruction_scan(unit_bump(), 2.0, 4.0, 1.0, as, g);
  CHECK(std::abs(F.values["slope"].get<double>()) < 0.02);
  const auto G = translation_obstruction_scan(unit_bump(), 2.0, 4.0, 2.0, as, g);
  CHECK(G.pass());
  CHECK(G.values["predicted_slope"].get<double>() == doctest::Approx(0.25));
}
