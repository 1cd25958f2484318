#include "driftlab/family.hpp"

#include <cmath>

namespace driftlab {

std::uint64_t SeededStream::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SeededStream::uniform(double lo, double hi) {
  const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

GridSpec battery_grid(int n) { return GridSpec(-3.0, 3.0, -2.5, 2.5, n, n); }

namespace {

std::function<double(const GroupPoint&)> gauss(double x0, double s0, double sx, double ss) {
  return [=](const GroupPoint& p) {
    const double dx = (p.x - x0) / sx, ds = (p.s() - s0) / ss;
    return std::exp(-0.5 * (dx * dx + ds * ds));
  };
}

}  // namespace

std::vector<FamilyMember> standard_family(std::uint64_t seed) {
  std::vector<FamilyMember> F;
  F.push_back({"centred", gauss(0.0, 0.0, 0.5, 0.5)});
  F.push_back({"shifted", gauss(0.6, 0.4, 0.4, 0.5)});
  F.push_back({"anisotropic", gauss(0.0, -0.2, 0.8, 0.35)});
  F.push_back({"narrow", gauss(-0.3, 0.2, 0.3, 0.3)});
  {
    auto g1 = gauss(-0.7, 0.3, 0.4, 0.4), g2 = gauss(0.5, -0.4, 0.35, 0.45);
    F.push_back({"two_bumps", [=](const GroupPoint& p) { return g1(p) + 0.6 * g2(p); }});
  }
  {
    auto g = gauss(0.0, 0.0, 0.5, 0.5);
    F.push_back({"x_dipole", [=](const GroupPoint& p) { return 2.0 * p.x * g(p); }});
  }
  {
    auto g = gauss(0.0, 0.1, 0.6, 0.5);
    F.push_back({"s_dipole", [=](const GroupPoint& p) { return 2.0 * (p.s() - 0.1) * g(p); }});
  }
  {
    auto g = gauss(0.1, 0.0, 0.6, 0.5);
    F.push_back({"modulated", [=](const GroupPoint& p) { return std::cos(2.5 * p.x) * g(p); }});
  }
  auto R = random_bumps(seed, 2);
  for (auto& m : R) F.push_back(std::move(m));
  return F;
}

std::vector<FamilyMember> random_bumps(std::uint64_t seed, int count, double width_lo, double width_hi) {
  SeededStream rng(seed);
  std::vector<FamilyMember> F;
  for (int k = 0; k < count; ++k) {
    const double x0 = rng.uniform(-0.8, 0.8), s0 = rng.uniform(-0.6, 0.6);
    const double sx = rng.uniform(width_lo, width_hi), ss = rng.uniform(width_lo, width_hi);
    const double amp = rng.uniform(0.5, 2.0);
    auto g = gauss(x0, s0, sx, ss);
    F.push_back({"random_" + std::to_string(k), [=](const GroupPoint& p) { return amp * g(p); }});
  }
  return F;
}

line::LineGrid line_battery_grid(int n) { return line::LineGrid(-16.0, 16.0, n); }

std::vector<LineMember> line_family() {
  std::vector<LineMember> F;
  for (double w : {0.5, 0.75, 1.0, 1.5}) F.push_back({"gauss_w" + std::to_string(w).substr(0, 4), [w](double x) {
                                                        return std::exp(-x * x / (2.0 * w * w));
                                                      }});
  F.push_back({"dipole", [](double x) { return x * std::exp(-x * x / 2.0); }});
  F.push_back({"modulated", [](double x) { return std::cos(2.0 * x) * std::exp(-x * x / 2.0); }});
  return F;
}

}  // namespace driftlab
