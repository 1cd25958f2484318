#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftlab/errors.hpp"
#include "driftlab/grid.hpp"
#include "driftlab/kernel_conv.hpp"
#include "driftlab/smooth.hpp"

#include <filesystem>
#include <random>

using namespace driftlab;

namespace {
double bump(const GroupPoint& p, double x0, double s0, double w) {
  const double r2 = (p.x - x0) * (p.x - x0) + (p.s() - s0) * (p.s() - s0);
  return std::exp(-r2 / (w * w));
}
}  // namespace

TEST_CASE("grid spec validation and node map") {
  CHECK_THROWS_AS(GridSpec(0, 1, 0, 1, 4, 16), ParameterError);
  CHECK_THROWS_AS(GridSpec(1, 0, 0, 1, 16, 16), ParameterError);
  const GridSpec g(-2, 2, -1, 1, 9, 11);
  CHECK(g.point(4, 5).x == doctest::Approx(0.0));
  CHECK(g.point(4, 5).a == doctest::Approx(1.0));
  CHECK(g.point(8, 10).a == doctest::Approx(std::exp(1.0)));
  CHECK(GridSpec::from_json(g.to_json()) == g);
}

TEST_CASE("sampling") {
  const GridSpec g(-2, 2, -1, 1, 17, 17);
  CHECK((sample([](const GroupPoint&) { return 1.0; }, g).values == 1.0).all());
  const Field d = sample([](const GroupPoint& p) { return modular(p); }, g);
  for (int j = 0; j < g.n_s; ++j) CHECK(d.values(3, j) == doctest::Approx(std::exp(-g.s(j))));
  const Field ind = sample([](const GroupPoint& p) { return cc_distance(identity(), p) <= 1.0 ? 1.0 : 0.0; }, g);
  for (int i = 0; i < g.n_x; ++i)
    for (int j = 0; j < g.n_s; ++j)
      CHECK(ind.values(i, j) == (cc_distance(identity(), g.point(i, j)) <= 1.0 ? 1.0 : 0.0));
  CHECK_THROWS_WITH_AS(sample([](const GroupPoint& p) { return p.x > 1.5 ? std::nan("") : 0.0; }, g),
                       doctest::Contains("node"), DomainError);
}

TEST_CASE("integration against rho, lambda, mu") {
  const GridSpec g(0, 1, 0, 1, 33, 33);
  const Field one = sample([](const GroupPoint&) { return 1.0; }, g);
  CHECK(integrate(one, MeasureTag::Rho()) == doctest::Approx(1.0).epsilon(1e-12));
  // int_0^1 e^{-s} ds = 1 - e^{-1}: trapezoid error h^2/12 * |f'| ~ 1e-4 relative
  CHECK(integrate(one, MeasureTag::Lambda()) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-4));

  // bilinear functions are integrated exactly against rho
  const GridSpec h(-1.5, 2.0, -0.5, 0.7, 13, 9);
  const Field bil = sample([](const GroupPoint& p) { return 2 + 3 * p.x - p.s() + 0.5 * p.x * p.s(); }, h);
  auto F = [](double x, double s) { return 2 * x * s + 1.5 * x * x * s - 0.5 * x * s * s + 0.125 * x * x * s * s; };
  const double exact = F(2.0, 0.7) - F(-1.5, 0.7) - F(2.0, -0.5) + F(-1.5, -0.5);
  CHECK(integrate(bil, MeasureTag::Rho()) == doctest::Approx(exact).epsilon(1e-10));

  // change of measure
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  Field f(h);
  for (int i = 0; i < h.n_x; ++i)
    for (int j = 0; j < h.n_s; ++j) f.values(i, j) = U(rng);
  for (double gamma : {0.0, 1.0, -1.3, 2.0}) {
    const Field fd = sample([gamma](const GroupPoint& p) { return character_eval(gamma, p); }, h);
    const Field prod{h, f.values * fd.values};
    CHECK(integrate(f, MeasureTag::Mu(gamma)) == doctest::Approx(integrate(prod, MeasureTag::Rho())).epsilon(1e-12));
  }
  CHECK(integrate(f, MeasureTag::Mu(0)) == integrate(f, MeasureTag::Rho()));
}

TEST_CASE("Lp norms") {
  const GridSpec g(0, 1, 0, 1, 17, 17);
  const Field one = sample([](const GroupPoint&) { return 1.0; }, g);
  for (double p : {1.0, 1.5, 2.0, 3.0, double(INFINITY)}) CHECK(lp_norm(one, p, MeasureTag::Rho()) == doctest::Approx(1.0));
  const GridSpec h(-2, 2, -1, 1, 21, 19);
  const Field f = sample([](const GroupPoint& q) { return std::sin(q.x) * q.a; }, h);
  for (double p : {1.0, 2.0, 3.5}) {
    CHECK(lp_norm(-2.5 * f, p, MeasureTag::Lambda()) == doctest::Approx(2.5 * lp_norm(f, p, MeasureTag::Lambda())));
  }
  CHECK(lp_norm(f, INFINITY, MeasureTag::Rho()) == lp_norm(f, INFINITY, MeasureTag::Mu(3.0)));
  CHECK_THROWS_AS(lp_norm(f, 0.5, MeasureTag::Rho()), ParameterError);
}

TEST_CASE("frame fields") {
  const GridSpec g(-1, 1, -1, 1, 41, 41);
  for (double gamma : {0.5, 2.0}) {
    const Field chi = sample([gamma](const GroupPoint& p) { return character_eval(gamma, p); }, g);
    const Field x0 = apply_field(chi, FrameField::X0);
    // O(h^2) pointwise, edges included
    CHECK(((x0.values + gamma * chi.values) / chi.values).abs().maxCoeff() < 0.5 * gamma * gamma * gamma * 0.05 * 0.05);
  }
  const Field c = sample([](const GroupPoint&) { return 3.0; }, g);
  CHECK(apply_field(c, FrameField::X0).values.abs().maxCoeff() < 1e-12);
  CHECK(apply_field(c, FrameField::X1).values.abs().maxCoeff() < 1e-12);
  const Field x = sample([](const GroupPoint& p) { return p.x; }, g);
  const Field ax = sample([](const GroupPoint& p) { return p.a; }, g);
  CHECK((apply_field(x, FrameField::X1).values - ax.values).abs().maxCoeff() < 1e-12);
  CHECK(apply_field(x, FrameField::X0).values.abs().maxCoeff() < 1e-12);

  CHECK((apply_word(x, Word{}).values == x.values).all());
  const Field x2 = sample([](const GroupPoint& p) { return p.x * p.x; }, g);
  const Field a2 = sample([](const GroupPoint& p) { return 2 * p.a * p.a; }, g);
  CHECK((apply_word(x2, {FrameField::X1, FrameField::X1}).values - a2.values).abs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(apply_word(x2, Word(4, FrameField::X0)), ParameterError);
}

TEST_CASE("second-order convergence and the bracket [X0, X1] = X1") {
  auto f = [](const GroupPoint& p) { return std::sin(1.3 * p.x + 0.4) * std::cos(0.8 * p.s()); };
  // X0 f = d_s f, X1 f = a d_x f
  auto x0 = [](const GroupPoint& p) { return -0.8 * std::sin(1.3 * p.x + 0.4) * std::sin(0.8 * p.s()); };
  auto x1 = [](const GroupPoint& p) { return p.a * 1.3 * std::cos(1.3 * p.x + 0.4) * std::cos(0.8 * p.s()); };
  double prev0 = 0, prev1 = 0, prevb = 0;
  for (int n : {17, 33, 65}) {
    const GridSpec g(-1, 1, -1, 1, n, n);
    const Field F = sample(f, g);
    const double e0 = (apply_field(F, FrameField::X0).values - sample(x0, g).values).abs().maxCoeff();
    const double e1 = (apply_field(F, FrameField::X1).values - sample(x1, g).values).abs().maxCoeff();
    const Field br = apply_word(F, {FrameField::X0, FrameField::X1}) - apply_word(F, {FrameField::X1, FrameField::X0});
    // interior error of the bracket (edges use one-sided stencils twice)
    const double eb = (br.values - sample(x1, g).values).block(2, 2, n - 4, n - 4).abs().maxCoeff();
    if (n > 17) {
      CHECK(prev0 / e0 >= 3.5);
      CHECK(prev1 / e1 >= 3.5);
      CHECK(prevb / eb >= 1.8);
    }
    prev0 = e0;
    prev1 = e1;
    prevb = eb;
  }
  CHECK(prevb < 5e-3);
}

TEST_CASE("wedge chart frame fields") {
  // chart (t = x/a, s): X0 = d_s - t d_t, X1 = d_t
  const GridSpec g(-1, 2, -3, 0, 61, 61, Chart::Wedge);
  const Field f = sample([](const GroupPoint& p) { return p.x * p.x + p.a; }, g);
  const Field x0 = sample([](const GroupPoint& p) { return p.a; }, g);              // a d_a
  const Field x1 = sample([](const GroupPoint& p) { return 2 * p.a * p.x; }, g);   // a d_x
  const Field X0f = apply_field(f, FrameField::X0);
  const Field X1f = apply_field(f, FrameField::X1);
  CHECK((X0f.values - x0.values).block(1, 1, 59, 59).abs().maxCoeff() < 0.015);
  CHECK((X0f.values - x0.values).abs().maxCoeff() < 0.05);
  CHECK((X1f.values - x1.values).abs().maxCoeff() < 1e-10);
  // rho-measure of {0 <= x/a <= 1, -3 <= s <= 0} is int e^s ds = 1 - e^{-3}
  const GridSpec w(0, 1, -3, 0, 9, 401, Chart::Wedge);
  CHECK(integrate(sample([](const GroupPoint&) { return 1.0; }, w), MeasureTag::Rho()) ==
        doctest::Approx(1 - std::exp(-3.0)).epsilon(1e-5));
}

TEST_CASE("generator is symmetric in L2(mu(gamma)) and matches the frame form") {
  const double x0 = 0.3, s0 = 0.1, w = 0.5;
  auto fr = [=](const GroupPoint& p) { return bump(p, x0, s0, w); };
  for (int n : {41, 81}) {
    const GridSpec g(-2, 2, -1.5, 1.5, n, n - 4);
    const Field f = sample(fr, g);
    const Field h = sample([](const GroupPoint& p) { return bump(p, -0.4, -0.3, 0.6) * (1 + p.x); }, g);
    for (double gamma : {0.0, 1.0, 2.0}) {
      // discrete inner product with the plain node weights e^{-gamma s_j}
      double lhs = 0, rhs = 0;
      const Field Af = generator_apply(f, gamma), Ah = generator_apply(h, gamma);
      for (int j = 0; j < g.n_s; ++j) {
        const double d = std::exp(-gamma * g.s(j));
        lhs += d * (Af.values.col(j) * h.values.col(j)).sum();
        rhs += d * (f.values.col(j) * Ah.values.col(j)).sum();
      }
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      // -(X0^2 + X1^2) f + gamma X0 f in closed form
      const Field ref = sample(
          [=](const GroupPoint& p) {
            const double dx = p.x - x0, ds = p.s() - s0, v = fr(p);
            const double fxx = v * (4 * dx * dx / (w * w * w * w) - 2 / (w * w));
            const double fss = v * (4 * ds * ds / (w * w * w * w) - 2 / (w * w));
            const double fs = -2 * ds / (w * w) * v;
            return -(fss + p.a * p.a * fxx) + gamma * fs;
          },
          g);
      const double tol = n == 41 ? 0.05 : 0.0125;
      CHECK((Af.values - ref.values).abs().maxCoeff() < tol * ref.values.abs().maxCoeff());
    }
  }
}

TEST_CASE("convolution: approximate identity and FFT vs direct paths") {
  const GridSpec g(-3, 3, -2, 2, 49, 41);
  const Field f = sample([](const GroupPoint& p) { return bump(p, 0.2, 0.1, 0.8); }, g);
  double prev = 1e9;
  for (double w : {0.4, 0.2, 0.1}) {
    Field phi = sample([w](const GroupPoint& p) { return bump(p, 0, 0, w); }, g);
    phi = (1.0 / integrate(phi, MeasureTag::Rho())) * phi;
    const ConvolutionResult r = convolve(f, phi);
    const double err = (r.field.values - f.values).abs().maxCoeff();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.05);

  GroupKernel K;
  K.radial = [](double r) { return std::exp(-r * r / 0.3); };
  K.beta = -0.5;
  const KernelOperator op(K, g);
  const Field a = op.apply(f), b = op.apply_direct(f);
  CHECK((a.values - b.values).abs().maxCoeff() <= 1e-8 * a.values.abs().maxCoeff());
  const auto many = op.apply_many({f, 2.0 * f});
  CHECK((many[1].values - 2.0 * a.values).abs().maxCoeff() <= 1e-12 * a.values.abs().maxCoeff());
  CField fc(g, f.values.cast<std::complex<double>>() * std::complex<double>(0.5, -1.0));
  const CField ac = op.apply(fc);
  CHECK((ac.values - a.values.cast<std::complex<double>>() * std::complex<double>(0.5, -1.0)).abs().maxCoeff() <
        1e-12 * a.values.abs().maxCoeff());
}

TEST_CASE("kernel operator is symmetric in L2(mu(2 beta + 1))") {
  const GridSpec g(-3, 3, -2, 2, 41, 33);
  const Field f = sample([](const GroupPoint& p) { return bump(p, 0.2, 0.1, 0.7); }, g);
  const Field h = sample([](const GroupPoint& p) { return bump(p, -0.5, 0.4, 0.6); }, g);
  for (double beta : {-0.5, 0.0, 0.5}) {
    GroupKernel K;
    K.radial = [](double r) { return std::exp(-r * r / 0.2); };
    K.beta = beta;
    const KernelOperator op(K, g);
    const MeasureTag m = MeasureTag::Mu(2 * beta + 1);
    const double l = integrate(Field{g, op.apply(f).values * h.values}, m);
    const double r = integrate(Field{g, f.values * op.apply(h).values}, m);
    CHECK(l == doctest::Approx(r).epsilon(1e-10));
  }
}

TEST_CASE("translation, reflection and truncation diagnostics") {
  const GridSpec g(-4, 4, -2, 2, 81, 81);
  auto fr = [](const GroupPoint& p) { return bump(p, 0.3, -0.2, 0.5); };
  const Field f = sample(fr, g);
  const GroupPoint y(0.4, 1.3);
  ResampleDiagnostics d;
  const Field Ly = left_translate(f, y, &d);
  const Field ref = sample([&](const GroupPoint& p) { return fr(multiply(inverse(y), p)); }, g);
  CHECK((Ly.values - ref.values).abs().maxCoeff() < 0.02);
  CHECK(d.truncation_mass < 1e-6);
  const Field far = left_translate(f, GroupPoint(0.0, std::exp(3.0)), &d);
  CHECK(d.truncation_mass > 0.5);
  CHECK(far.values.abs().maxCoeff() < 0.5);
  const Field rf = reflect(f, &d);
  const Field rref = sample([&](const GroupPoint& p) { return fr(inverse(p)); }, g);
  CHECK((rf.values - rref.values).abs().maxCoeff() < 0.02);
}

TEST_CASE("bit-exact serialization") {
  const GridSpec g(-1.1, 2.3, -0.7, 0.9, 13, 11);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  Field f(g);
  for (int i = 0; i < g.n_x; ++i)
    for (int j = 0; j < g.n_s; ++j) f.values(i, j) = N(rng) * std::pow(10.0, N(rng) * 5);
  const auto dir = std::filesystem::temp_directory_path() / "driftlab_test_io";
  std::filesystem::create_directories(dir);
  write_binary(f, (dir / "f.bin").string());
  const Field b = read_binary<double>((dir / "f.bin").string());
  CHECK(b.spec == g);
  CHECK((b.values == f.values).all());
  write_csv(f, (dir / "f.csv").string());
  const Field c = read_csv((dir / "f.csv").string());
  CHECK(c.spec == g);
  CHECK((c.values == f.values).all());
  CField z(g, f.values.cast<std::complex<double>>() * std::complex<double>(1.0, -3.0));
  write_binary(z, (dir / "z.bin").string());
  CHECK((read_binary<std::complex<double>>((dir / "z.bin").string()).values == z.values).all());
  CHECK_THROWS_AS(read_binary<double>((dir / "z.bin").string()), ParameterError);
  std::filesystem::remove_all(dir);
}
