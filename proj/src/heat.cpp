#include "driftlab/heat.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/quadrature.hpp"
#include "driftlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace driftlab {

namespace {

constexpr double kTailSigmas = 12.0;

double mckean_prefactor(double t) {
  return std::numbers::sqrt2 * std::exp(-t / 4.0) / std::pow(4.0 * std::numbers::pi * t, 1.5);
}

}  // namespace

double hyperbolic_kernel(double t, double r) {
  if (!(t > 0.0)) throw DomainError("hyperbolic_kernel: t must be positive");
  if (r < 0.0) r = -r;
  const double g = r * r / (4.0 * t);
  if (g > 745.0) return 0.0;
  // s = r + u^2; e^{-s^2/4t} = e^{-r^2/4t} e^{-(s^2 - r^2)/4t}
  auto f = [&](double u) {
    const double u2 = u * u;
    const double s = r + u2;
    const double excess = (2.0 * r * u2 + u2 * u2) / (4.0 * t);
    // cosh s - cosh r = 2 sinh(r + u^2/2) sinh(u^2/2)
    const double den = std::sqrt(2.0 * std::sinh(r + 0.5 * u2) * std::sinh(0.5 * u2));
    if (den == 0.0) return r > 0.0 ? 2.0 * r / std::sqrt(std::sinh(r)) : 0.0;
    return 2.0 * u * s * std::exp(-excess) / den;
  };
  const double U = std::sqrt(kTailSigmas * std::sqrt(t));
  // the integrand changes character at u ~ sqrt(r) and u ~ t^{1/4}
  std::vector<double> cuts{0.0, U};
  for (double c : {std::sqrt(std::max(r, 1e-12)), std::pow(t, 0.25), 0.25 * U})
    if (c > 0.0 && c < U) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) integral += quad::gk(f, cuts[k], cuts[k + 1], 1e-12);
  const double value = mckean_prefactor(t) * std::exp(-g) * integral;
  return value + hyperbolic_kernel_tail_bound(t, r);
}

double hyperbolic_kernel_tail_bound(double t, double r) {
  // int_R^inf s e^{-s^2/4t} / sqrt(cosh s - cosh r) ds <= 2t e^{-R^2/4t} / sqrt(cosh R - cosh r)
  const double R = r + kTailSigmas * std::sqrt(t);
  const double den = std::sqrt(2.0 * std::sinh(0.5 * (R + r)) * std::sinh(0.5 * (R - r)));
  return mckean_prefactor(t) * 2.0 * t * std::exp(-R * R / (4.0 * t)) / den;
}

HeatKernelModel::HeatKernelModel(double gamma, double r_max) : gamma_(gamma), r_max_(r_max) {}

std::shared_ptr<const RadialProfile> HeatKernelModel::table(double t) const {
  if (!(t > 0.0)) throw DomainError("heat kernel: t must be positive");
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = tables_.find(t);
    if (it != tables_.end()) return it->second;
  }
  RadialProfile::Layout L;
  L.r_hi = r_max_;
  L.dr = std::min(0.02, std::sqrt(t) / 48.0);
  // never more nodes than needed before underflow (r ~ 53 sqrt t)
  L.r_hi = std::min(r_max_, 60.0 * std::sqrt(t) + 2.0 * t + 1.0);
  if (L.r_hi < r_max_ && L.r_hi < 3 * L.dr) L.r_hi = 3 * L.dr;
  auto P = std::make_shared<RadialProfile>(RadialProfile::build([t](double r) { return hyperbolic_kernel(t, r); }, L));
  std::lock_guard<std::mutex> lock(mu_);
  tables_[t] = P;
  return P;
}

double HeatKernelModel::p_t(double t, const GroupPoint& z) const {
  const double r = cc_distance(identity(), z);
  return std::exp(t * (1.0 - gamma_ * gamma_) / 4.0) * (*table(t))(r) * std::pow(z.a, beta());
}

double HeatKernelModel::p_t_direct(double t, const GroupPoint& z) const {
  const double r = cc_distance(identity(), z);
  return std::exp(t * (1.0 - gamma_ * gamma_) / 4.0) * hyperbolic_kernel(t, r) * std::pow(z.a, beta());
}

GroupKernel HeatKernelModel::kernel(double t) const {
  auto tab = table(t);
  const double pref = std::exp(t * (1.0 - gamma_ * gamma_) / 4.0);
  GroupKernel K;
  K.radial = [tab, pref](double r) { return pref * (*tab)(r); };
  K.beta = beta();
  K.mass = 1.0;
  std::ostringstream os;
  os.precision(17);
  os << "heat t=" << t << " gamma=" << gamma_;
  K.label = os.str();
  return K;
}

double p_t_chi(const HeatKernelModel& model, double t, const GroupPoint& z) { return model.p_t(t, z); }

double heat_mass(double t, double gamma) {
  if (!(t > 0.0)) throw DomainError("heat_mass: t must be positive");
  // polar coordinates about e: drho = a dlambda, dlambda = sinh r dr dth
  const double beta = 0.5 * (gamma - 1.0);
  const double r_cut = 2.0 * t * (1.0 + std::abs(beta)) + 14.0 * std::sqrt(t);
  HeatKernelModel model(gamma, r_cut + 0.5);
  auto tab = model.table(t);
  auto f = [&](double r) { return (*tab)(r) * std::sinh(r) * angular_moment(r, beta + 1.0); };
  const double sq = std::sqrt(t);
  std::vector<double> knots{0.0};
  for (double k : {0.5, 1.0, 2.0, 4.0, 8.0})
    if (k * sq < r_cut) knots.push_back(k * sq);
  knots.push_back(r_cut);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) sum += quad::gk(f, knots[k], knots[k + 1], 1e-9, 10);
  return std::exp(t * (1.0 - gamma * gamma) / 4.0) * sum;
}

double grid_diameter(const GridSpec& g) {
  const double X = g.x_max - g.x_min, S = g.s_max - g.s_min;
  return std::acosh(std::cosh(S) + 0.5 * X * X * std::exp(-2.0 * g.s_min));
}

std::shared_ptr<const KernelOperator> heat_operator(const GridSpec& g, double t, double gamma, bool cache_spectra) {
  if (!(t > 0.0)) throw DomainError("heat_apply: t must be positive");
  const double rmax = grid_diameter(g) + 0.5;
  std::ostringstream key;
  key.precision(17);
  key << "heat t=" << t << " gamma=" << gamma << " r=" << rmax;
  return cached_operator(key.str(), g, [&] { return HeatKernelModel(gamma, rmax).kernel(t); }, cache_spectra);
}

Field heat_apply(const Field& f, double t, double gamma, ConvDiagnostics* diag) {
  auto op = heat_operator(f.spec, t, gamma);
  Field out = op->apply(f);
  if (diag) diag->truncation_mass = op->truncation_mass(f);
  return out;
}

CField heat_apply(const CField& f, double t, double gamma) { return heat_operator(f.spec, t, gamma)->apply(f); }

// ---- Gaussian envelope certificate ----------------------------------------

namespace {

struct Line {
  double logC, omega;
};

// minimise logC + omega * tbar subject to logC + omega t_k >= F_k
Line lp_fit(const std::vector<double>& t, const std::vector<double>& F) {
  const std::size_t n = t.size();
  if (n == 1) return {F[0], 0.0};
  double tbar = 0.0;
  for (double v : t) tbar += v;
  tbar /= static_cast<double>(n);
  Line best{std::numeric_limits<double>::infinity(), 0.0};
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) {
      if (t[i] == t[k]) continue;
      const double om = (F[k] - F[i]) / (t[k] - t[i]);
      const double lc = F[i] - om * t[i];
      bool ok = true;
      for (std::size_t q = 0; q < n && ok; ++q) ok = lc + om * t[q] >= F[q] - 1e-12 * (1.0 + std::abs(F[q]));
      if (!ok) continue;
      const double obj = lc + om * tbar;
      if (obj < best_obj) {
        best_obj = obj;
        best = {lc, om};
      }
    }
  return best;
}

}  // namespace

KernelBoundCertificate fit_envelope(const std::vector<EnvelopeSample>& samples, double dim_exponent) {
  KernelBoundCertificate cert;
  std::set<double> tset;
  for (const auto& s : samples) tset.insert(s.t);
  cert.t_set.assign(tset.begin(), tset.end());
  if (samples.empty()) {
    cert.detail = "no finite samples";
    return cert;
  }

  auto fit_at = [&](double b) {
    std::vector<double> F(cert.t_set.size(), -std::numeric_limits<double>::infinity());
    for (const auto& s : samples) {
      const auto k = static_cast<std::size_t>(std::lower_bound(cert.t_set.begin(), cert.t_set.end(), s.t) -
                                              cert.t_set.begin());
      F[k] = std::max(F[k], s.log_value + dim_exponent * std::log(s.t) + b * s.r2 / s.t);
    }
    return lp_fit(cert.t_set, F);
  };

  // largest b in [0.2, 0.25] whose prefactor stays within a factor 2 of the b = 0.2 fit
  const Line base = fit_at(0.2);
  double b_hat = 0.2;
  Line chosen = base;
  for (int k = 20; k >= 0; --k) {
    const double b = 0.2 + 0.0025 * k;
    const Line L = fit_at(b);
    if (std::isfinite(L.logC) && L.logC <= base.logC + std::log(2.0) + 1e-12) {
      b_hat = b;
      chosen = L;
      break;
    }
  }
  cert.b = b_hat;
  cert.omega = chosen.omega;
  cert.prefactor = std::exp(chosen.logC);

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const double env = chosen.logC - dim_exponent * std::log(s.t) + chosen.omega * s.t - b_hat * s.r2 / s.t;
    worst = std::max(worst, s.log_value - env);
  }
  cert.max_violation = worst;
  constexpr double omega_cap = 10.0;
  cert.success = std::isfinite(chosen.logC) && b_hat >= 0.2 && worst <= 1e-10 && chosen.omega <= omega_cap;
  if (!cert.success)
    cert.detail = "no admissible envelope with b >= 0.2 (omega " + std::to_string(chosen.omega) + ", violation " +
                  std::to_string(worst) + ")";
  return cert;
}

KernelBoundCertificate certify_gaussian_bound(const HeatKernelModel& model, const std::vector<double>& t_set, int m,
                                              int n) {
  if (m != 0 && m != 1) throw ParameterError("certify_gaussian_bound: m must be 0 or 1");
  for (double t : t_set)
    if (!(t > 0.0 && t <= 2.0)) throw ParameterError("certify_gaussian_bound: t must lie in (0, 2]");
  const double gamma = model.gamma();
  std::vector<EnvelopeSample> samples;
  double r2_min = 1.0;
  for (double t : t_set) {
    const double L = std::clamp(5.0 * std::sqrt(t), 0.5, 4.0);
    const GridSpec g(-L, L, -L, L, n, n);
    HeatKernelModel local(gamma, grid_diameter(g) + 0.5);
    const Field p = sample([&](const GroupPoint& z) { return local.p_t(t, z); }, g);
    std::vector<Field> parts;
    if (m == 0) {
      parts.push_back(p);
    } else {
      parts.push_back(apply_field(p, FrameField::X0));
      parts.push_back(apply_field(p, FrameField::X1));
    }
    for (int j = 0; j < g.n_s; ++j)
      for (int i = 0; i < g.n_x; ++i) {
        const GroupPoint z = g.point(i, j);
        double v = 0.0;
        for (const auto& q : parts) v = std::max(v, std::abs(q.values(i, j)));
        if (!(v > 0.0)) continue;
        const double r = cc_distance(identity(), z);
        samples.push_back({t, r * r, std::log(v) + 0.5 * std::log(character_eval(gamma, z))});
      }

    // quadratic decay of the radial profile on [sqrt t, 4 sqrt t]
    const auto tab = local.table(t);
    Eigen::VectorXd X(40), Y(40);
    for (int k = 0; k < 40; ++k) {
      const double r = std::sqrt(t) * (1.0 + 3.0 * k / 39.0);
      X(k) = r * r;
      Y(k) = std::log((*tab)(r));
    }
    const double mx = X.mean(), my = Y.mean();
    const double sxy = ((X.array() - mx) * (Y.array() - my)).sum();
    const double sxx = (X.array() - mx).square().sum(), syy = (Y.array() - my).square().sum();
    r2_min = std::min(r2_min, sxy * sxy / (sxx * syy));
  }
  KernelBoundCertificate cert = fit_envelope(samples, 0.5 * (2 + m));
  cert.m = m;
  cert.quadratic_r2 = r2_min;
  if (r2_min < 0.99) {
    cert.success = false;
    cert.detail += " quadratic-exponent fit R^2 " + std::to_string(r2_min);
  }
  return cert;
}

void export_kernel_csv(const HeatKernelModel& model, const std::vector<double>& t_set, const std::string& path) {
  std::ostringstream os;
  os << "t,r,value\n";
  for (double t : t_set) model.table(t)->write_csv_rows(os, t);
  write_atomic(path, os.str());
}

}  // namespace driftlab
