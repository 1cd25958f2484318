#include "driftlab/radial.hpp"

#include "driftlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace driftlab {

UniformMonotoneCubic::UniformMonotoneCubic(double x0, double dx, std::vector<double> y)
    : x0_(x0), dx_(dx), y_(std::move(y)) {
  const std::size_t n = y_.size();
  if (n < 3) throw ParameterError("UniformMonotoneCubic needs at least 3 nodes");
  m_.assign(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) m_[k] = (y_[k + 1] - y_[k - 1]) / (2.0 * dx_);
  m_[0] = (-3.0 * y_[0] + 4.0 * y_[1] - y_[2]) / (2.0 * dx_);
  m_[n - 1] = (3.0 * y_[n - 1] - 4.0 * y_[n - 2] + y_[n - 3]) / (2.0 * dx_);

  // Fritsch-Carlson: keep the interpolant monotone wherever the data are.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double d = (y_[k + 1] - y_[k]) / dx_;
    if (d == 0.0) {
      m_[k] = m_[k + 1] = 0.0;
      continue;
    }
    if (m_[k] * d < 0.0) m_[k] = 0.0;
    if (m_[k + 1] * d < 0.0) m_[k + 1] = 0.0;
    const double al = m_[k] / d, be = m_[k + 1] / d;
    const double q = al * al + be * be;
    if (q > 9.0) {
      const double tau = 3.0 / std::sqrt(q);
      m_[k] = tau * al * d;
      m_[k + 1] = tau * be * d;
    }
  }
}

double UniformMonotoneCubic::operator()(double x) const {
  const double t = (x - x0_) / dx_;
  const auto last = static_cast<double>(y_.size() - 2);
  const double kf = std::clamp(std::floor(t), 0.0, last);
  const auto k = static_cast<std::size_t>(kf);
  const double u = std::clamp(t - kf, 0.0, 1.0);
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * y_[k] + h10 * dx_ * m_[k] + h01 * y_[k + 1] + h11 * dx_ * m_[k + 1];
}

namespace {

// Sample ln fn on x0 + k dx (x mapped to r by `to_r`); stops at the first zero.
std::vector<double> sample_log(const std::function<double(double)>& fn, double x0, double dx, int n,
                               const std::function<double(double)>& to_r, bool& hit_zero) {
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (int k = 0; k < n; ++k) {
    const double v = fn(to_r(x0 + k * dx));
    y[static_cast<std::size_t>(k)] = v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
  }
  hit_zero = false;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!std::isfinite(y[k]) || y[k] < -700.0) {
      y.resize(k);
      hit_zero = true;
      break;
    }
  }
  return y;
}

}  // namespace

RadialProfile RadialProfile::build(const std::function<double(double)>& fn, const Layout& L) {
  RadialProfile P;
  P.has_log_ = L.r_lo > 0.0 && L.r_switch > L.r_lo;
  double r_start = 0.0;
  if (P.has_log_) {
    P.r_lo_ = L.r_lo;
    P.r_sw_ = L.r_switch;
    const double u0 = std::log(L.r_lo), u1 = std::log(L.r_switch);
    const int n = std::max(3, static_cast<int>(std::ceil((u1 - u0) / std::log(10.0) * L.per_decade)) + 1);
    const double du = (u1 - u0) / (n - 1);
    bool zero = false;
    auto y = sample_log(fn, u0, du, n, [](double u) { return std::exp(u); }, zero);
    if (zero) throw DomainError("RadialProfile: singular region underflows");
    P.log_region_ = UniformMonotoneCubic(u0, du, std::move(y));
    P.origin_power_ = P.log_region_.front_slope();
    if (std::isfinite(L.origin_power)) {
      const double r0 = L.r_lo, r1 = std::exp(u0 + du);
      const double k0 = std::exp(P.log_region_.node_value(0)), k1 = std::exp(P.log_region_.node_value(1));
      auto g = [&](double r) { return L.origin_power == 0.0 ? std::log(r) : std::pow(r, L.origin_power); };
      P.origin_a_ = (k1 - k0) / (g(r1) - g(r0));
      P.origin_b_ = k0 - P.origin_a_ * g(r0);
      P.origin_power_ = L.origin_power;
      P.origin_fit_ = true;
    }
    r_start = L.r_switch;
  }
  const int n = std::max(3, static_cast<int>(std::ceil((L.r_hi - r_start) / L.dr)) + 1);
  const double dr = (L.r_hi - r_start) / (n - 1);
  bool zero = false;
  auto y = sample_log(fn, r_start, dr, n, [](double r) { return r; }, zero);
  if (y.size() < 3) {
    // the profile underflows almost at once; keep a minimal table
    throw ResolutionError("RadialProfile: table underflows before three nodes");
  }
  P.tail_zero_ = zero;
  P.r_end_ = r_start + dr * static_cast<double>(y.size() - 1);
  P.lin_region_ = UniformMonotoneCubic(r_start, dr, std::move(y));
  P.tail_slope_ = std::min(P.lin_region_.back_slope(), 0.0);
  return P;
}

double RadialProfile::operator()(double r) const {
  if (has_log_ && r < r_sw_) {
    const double u = std::log(std::max(r, 1e-300));
    if (r < r_lo_) {
      if (origin_fit_) {
        const double g = origin_power_ == 0.0 ? u : std::exp(origin_power_ * u);
        return std::max(origin_a_ * g + origin_b_, 0.0);
      }
      const double u0 = log_region_.x_begin();
      return std::exp(log_region_.node_value(0) + origin_power_ * (u - u0));
    }
    return std::exp(log_region_(u));
  }
  if (r > r_end_) {
    if (tail_zero_) return 0.0;
    return std::exp(lin_region_.node_value(lin_region_.size() - 1) + tail_slope_ * (r - r_end_));
  }
  return std::exp(lin_region_(r));
}

void RadialProfile::write_csv_rows(std::ostream& os, double t_label, int stride) const {
  os.precision(17);
  if (has_log_) {
    for (std::size_t k = 0; k < log_region_.size(); k += static_cast<std::size_t>(stride)) {
      const double u = log_region_.x_begin() + (log_region_.x_end() - log_region_.x_begin()) *
                                                   static_cast<double>(k) / static_cast<double>(log_region_.size() - 1);
      os << t_label << ',' << std::exp(u) << ',' << std::exp(log_region_.node_value(k)) << '\n';
    }
  }
  const double x0 = lin_region_.x_begin(), x1 = lin_region_.x_end();
  for (std::size_t k = 0; k < lin_region_.size(); k += static_cast<std::size_t>(stride)) {
    const double r = x0 + (x1 - x0) * static_cast<double>(k) / static_cast<double>(lin_region_.size() - 1);
    os << t_label << ',' << r << ',' << std::exp(lin_region_.node_value(k)) << '\n';
  }
}

}  // namespace driftlab
