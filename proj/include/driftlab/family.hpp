#pragma once

// Test batteries: smooth bumps in (x, s) that vanish to round-off at the edge of the
// battery rectangle, plus seeded random families.

#include "driftlab/grid.hpp"
#include "driftlab/line.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace driftlab {

struct FamilyMember {
  std::string name;
  std::function<double(const GroupPoint&)> rule;
};

// Splitmix64 stream; the same seed gives the same doubles on every platform.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform(double lo = 0.0, double hi = 1.0);
  static constexpr const char* name() { return "splitmix64"; }

 private:
  std::uint64_t state_;
};

// Rectangle x in [-3, 3], s in [-2.5, 2.5] with n x n nodes.
GridSpec battery_grid(int n = 49);

// Ten members: centred, shifted, anisotropic and narrow Gaussians, a two-bump sum,
// dipoles in x and s, a modulated bump, and two seeded random bumps.
std::vector<FamilyMember> standard_family(std::uint64_t seed = 1);

// Nonnegative Gaussian bumps with random centre and widths.
std::vector<FamilyMember> random_bumps(std::uint64_t seed, int count, double width_lo = 0.3, double width_hi = 0.6);

struct LineMember {
  std::string name;
  std::function<double(double)> rule;
};
line::LineGrid line_battery_grid(int n = 1025);
std::vector<LineMember> line_family();

}  // namespace driftlab
