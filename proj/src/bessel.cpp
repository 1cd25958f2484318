#include "driftlab/bessel.hpp"

#include "driftlab/errors.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace driftlab {

namespace {

constexpr double kT0 = 1e-6;
constexpr double kTCap = 400.0;
constexpr double kDtau = 0.15;

// Table layout shared by all Bessel profiles. The linear spacing is nudged up so that
// RadialProfile::build lands on the same nodes for every r_max, which keeps the
// heat-value cache below hitting across kernels.
constexpr double kRlo = 1e-4, kRswitch = 0.2, kDr = 0.01;

RadialProfile::Layout bessel_layout(double r_max, double origin_power) {
  RadialProfile::Layout L;
  L.origin_power = origin_power;
  L.r_lo = kRlo;
  L.r_switch = kRswitch;
  L.per_decade = 40;
  const double N = std::ceil((r_max - kRswitch) / kDr - 1e-9);
  L.r_hi = kRswitch + kDr * std::max(N, 3.0);
  L.dr = kDr * (1.0 + 1e-9);
  return L;
}

// h_t(r) on the subordination grid, one vector per radius; radii repeat across kernels
const std::vector<double>& heat_values(double r) {
  static std::mutex m;
  static std::unordered_map<long long, std::unique_ptr<std::vector<double>>> cache;
  const long long key = std::llround(r * 1e9);
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  const auto& G = subordination_grid();
  auto v = std::make_unique<std::vector<double>>(static_cast<std::size_t>(G.n));
  for (int k = 0; k < G.n; ++k) {
    const double t = G.t(k);
    (*v)[static_cast<std::size_t>(k)] = r * r / (4.0 * t) > 745.0 ? 0.0 : hyperbolic_kernel(t, r);
  }
  std::lock_guard<std::mutex> lock(m);
  auto [it, inserted] = cache.emplace(key, std::move(v));
  return *it->second;
}

double hyperbolic_phi(double r) { return r < 1e-8 ? 1.0 : std::sqrt(r / std::sinh(r)); }

}  // namespace

const SubordinationGrid& subordination_grid() {
  static const SubordinationGrid G{std::log(kT0), kDtau,
                                   static_cast<int>(std::ceil((std::log(kTCap) - std::log(kT0)) / kDtau)) + 1};
  return G;
}

double upper_gamma(double s, double x) {
  if (!(x > 0.0)) throw DomainError("upper_gamma: x must be positive");
  if (x > 700.0) return 0.0;
  if (s > 0.0) return boost::math::tgamma(s, x);
  if (s == 0.0) return boost::math::expint(1, x);
  // Gamma(s, x) = (Gamma(s + 1, x) - x^s e^{-x}) / s
  return (upper_gamma(s + 1.0, x) - std::pow(x, s) * std::exp(-x)) / s;
}

double subordinate(const double* H, double alpha, double c_eff, double decay, double r, int d, double phi) {
  const auto& G = subordination_grid();
  const double kappa = c_eff + decay;
  if (!(kappa > 0.0)) throw DomainError("subordinate: integrand does not decay at large t");
  const double T_max = std::min(kTCap, 40.0 / kappa);
  int N = 0;
  while (N + 1 < G.n && G.t(N + 1) <= T_max) ++N;
  const double ha = 0.5 * alpha;

  auto f = [&](int k) {
    const double t = G.t(k);
    return std::pow(t, ha) * std::exp(-c_eff * t) * H[k];
  };
  double sum = 0.0;
  for (int k = 0; k <= N; ++k) sum += (k == 0 || k == N ? 0.5 : 1.0) * f(k);
  sum *= G.dtau;

  // small t: H ~ (4 pi t)^{-d/2} e^{-r^2/4t} phi, integrated in closed form
  const double a = ha - 0.5 * d;
  const double t0 = G.t(0);
  const double pref = std::pow(4.0 * std::numbers::pi, -0.5 * d) * phi;
  if (r > 0.0) {
    const double x0 = r * r / (4.0 * t0);
    sum += pref * std::pow(r * r / 4.0, a) * upper_gamma(-a, x0);
    // Euler-Maclaurin end correction of the trapezoid at tau0
    sum += G.dtau * G.dtau / 12.0 * f(0) * (a + x0 - c_eff * t0);
  } else {
    if (!(a > 0.0)) throw DomainError("subordinate: kernel is singular at r = 0");
    sum += pref * std::pow(t0, a) / a;
    sum += G.dtau * G.dtau / 12.0 * f(0) * a;
  }
  // large t: continue the last logarithmic slope
  const double fN = f(N), fN1 = f(N - 1);
  if (fN > 0.0 && fN1 > 0.0) {
    const double slope = (std::log(fN) - std::log(fN1)) / G.dtau;
    if (slope < 0.0) sum += fN / -slope - G.dtau * G.dtau / 12.0 * slope * fN;
  }
  return sum / std::tgamma(ha);
}

// ---- certificate floor -----------------------------------------------------

double certified_omega(double gamma) {
  static std::mutex m;
  static std::map<double, double> cache;
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(gamma);
    if (it != cache.end()) return it->second;
  }
  const HeatKernelModel model(gamma);
  const auto cert = certify_gaussian_bound(model, {0.05, 0.1, 0.25, 0.5, 1.0}, 0, 49);
  if (!cert.success) throw ScientificFailure("heat certificate failed for gamma: " + cert.detail);
  std::lock_guard<std::mutex> lock(m);
  cache[gamma] = cert.omega;
  return cert.omega;
}

double c_min(double gamma) { return std::max(certified_omega(gamma), 0.0) + 1.0; }

void check_bessel_params(const BesselParams& p) {
  if (!(p.alpha > 0.0)) throw ParameterError("Bessel potential: alpha must be positive");
  if (!(p.c > 0.0)) throw ParameterError("Bessel potential: c must be positive");
  const double w = certified_omega(p.gamma);
  if (!(p.c > w)) {
    std::ostringstream os;
    os << "Bessel potential: c = " << p.c << " does not exceed the certified omega " << w
       << "; the subordination tail is not controlled";
    throw DomainError(os.str());
  }
}

// ---- ax+b ------------------------------------------------------------------

BesselKernelModel::BesselKernelModel(const BesselParams& p, double r_max) : p_(p), r_max_(r_max) {
  check_bessel_params(p);
}

double BesselKernelModel::radial_direct(double r) const {
  const double c_eff = p_.c - (1.0 - p_.gamma * p_.gamma) / 4.0;
  return subordinate(heat_values(r).data(), p_.alpha, c_eff, 0.25, r, 2, hyperbolic_phi(r));
}

std::shared_ptr<const RadialProfile> BesselKernelModel::table() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!table_)
    table_ = std::make_shared<const RadialProfile>(
        RadialProfile::build([this](double r) { return radial_direct(r); }, bessel_layout(r_max_, p_.alpha - 2.0)));
  return table_;
}

double BesselKernelModel::operator()(const GroupPoint& z) const {
  return (*table())(cc_distance(identity(), z)) * std::pow(z.a, beta());
}

GroupKernel BesselKernelModel::kernel() const {
  auto tab = table();
  GroupKernel K;
  K.radial = [tab](double r) { return (*tab)(r); };
  K.beta = beta();
  K.mass = mass();
  std::ostringstream os;
  os.precision(17);
  os << "bessel alpha=" << p_.alpha << " gamma=" << p_.gamma << " c=" << p_.c;
  K.label = os.str();
  return K;
}

double bessel_kernel(const BesselParams& p, const GroupPoint& z) {
  BesselKernelModel M(p, cc_distance(identity(), z) + 1.0);
  return M.radial_direct(cc_distance(identity(), z)) * std::pow(z.a, M.beta());
}

std::shared_ptr<const KernelOperator> bessel_operator(const GridSpec& g, const BesselParams& p) {
  check_bessel_params(p);
  const double rmax = grid_diameter(g) + 0.5;
  std::ostringstream key;
  key.precision(17);
  key << "bessel alpha=" << p.alpha << " gamma=" << p.gamma << " c=" << p.c << " r=" << rmax;
  return cached_operator(key.str(), g, [&] { return BesselKernelModel(p, rmax).kernel(); });
}

Field bessel_apply(const Field& f, const BesselParams& p, ConvDiagnostics* diag) {
  if (p.alpha == 0.0) return f;
  auto op = bessel_operator(f.spec, p);
  Field out = op->apply(f);
  if (diag) diag->truncation_mass = op->truncation_mass(f);
  return out;
}

// ---- line ------------------------------------------------------------------

namespace line {

double bessel_kernel(double alpha, double c, double x) {
  if (!(alpha > 0.0) || !(c > 0.0)) throw ParameterError("line Bessel kernel: need alpha > 0, c > 0");
  const auto& G = subordination_grid();
  const double r = std::abs(x);
  std::vector<double> H(static_cast<std::size_t>(G.n));
  for (int k = 0; k < G.n; ++k) H[static_cast<std::size_t>(k)] = gauss_kernel(G.t(k), r);
  return subordinate(H.data(), alpha, c, 0.0, r, 1, 1.0);
}

double bessel_kernel_closed(double alpha, double c, double x) {
  const double r = std::abs(x);
  const double nu = 0.5 * (alpha - 1.0);
  return 2.0 / std::sqrt(4.0 * std::numbers::pi) / std::tgamma(0.5 * alpha) * std::pow(r * r / (4.0 * c), 0.5 * nu) *
         boost::math::cyl_bessel_k(nu, std::sqrt(c) * r);
}

std::shared_ptr<const RadialProfile> bessel_table(double alpha, double c, double r_max) {
  static std::mutex m;
  static std::map<std::tuple<double, double, double>, std::shared_ptr<const RadialProfile>> cache;
  const auto key = std::make_tuple(alpha, c, r_max);
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto P = std::make_shared<const RadialProfile>(
      RadialProfile::build([=](double r) { return bessel_kernel(alpha, c, r); }, bessel_layout(r_max, alpha - 1.0)));
  std::lock_guard<std::mutex> lock(m);
  cache[key] = P;
  return P;
}

LineField bessel_apply(const LineField& f, double alpha, double c) {
  if (alpha == 0.0) return f;
  auto tab = bessel_table(alpha, c, f.grid.x_max - f.grid.x_min + 1.0);
  LineKernelOperator op([tab](double x) { return (*tab)(x); }, f.grid, std::pow(c, -0.5 * alpha));
  return op.apply(f);
}

}  // namespace line

}  // namespace driftlab
