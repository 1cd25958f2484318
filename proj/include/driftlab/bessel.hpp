#pragma once

// Bessel potentials (Delta_chi + c)^{-alpha/2} by subordination of the heat kernel:
//   G(z) = Gamma(alpha/2)^{-1} int_0^inf t^{alpha/2 - 1} e^{-ct} p_t^chi(z) dt.
// On ax+b, G(z) = g(|z|) a^{(gamma - 1)/2} with a radial part g built from McKean's
// kernel, so every (alpha, gamma, c) shares one cache of h_t(r) values.

#include "driftlab/heat.hpp"
#include "driftlab/line.hpp"

namespace driftlab {

struct BesselParams {
  double alpha = 1.0;
  double gamma = 0.0;
  double c = 1.0;
};

// omega of the m = 0 heat certificate for gamma, computed once per process
double certified_omega(double gamma);
// max(omega, 0) + 1
double c_min(double gamma);

// Generic subordination on the log-t grid shared by every kernel.
//   H[k]     heat kernel value at t_k
//   decay    extra exponential rate of H at large t (1/4 on ax+b, 0 on the line)
//   d        dimension of the small-t Gaussian regime, H ~ (4 pi t)^{-d/2} e^{-r^2/4t} phi
//   phi      the angular factor in that regime ((r / sinh r)^{1/2} on ax+b)
struct SubordinationGrid {
  double tau0, dtau;
  int n;
  double t(int k) const { return std::exp(tau0 + k * dtau); }
};
const SubordinationGrid& subordination_grid();
double subordinate(const double* H, double alpha, double c_eff, double decay, double r, int d, double phi);

// Upper incomplete gamma Gamma(s, x) for any real s and x > 0.
double upper_gamma(double s, double x);

class BesselKernelModel {
 public:
  BesselKernelModel(const BesselParams& p, double r_max = 12.0);

  const BesselParams& params() const { return p_; }
  double beta() const { return 0.5 * (p_.gamma - 1.0); }
  double mass() const { return std::pow(p_.c, -0.5 * p_.alpha); }

  double radial_direct(double r) const;  // subordination quadrature at r
  std::shared_ptr<const RadialProfile> table() const;
  double operator()(const GroupPoint& z) const;
  GroupKernel kernel() const;

 private:
  BesselParams p_;
  double r_max_;
  mutable std::mutex mu_;
  mutable std::shared_ptr<const RadialProfile> table_;
};

void check_bessel_params(const BesselParams& p);

double bessel_kernel(const BesselParams& p, const GroupPoint& z);
std::shared_ptr<const KernelOperator> bessel_operator(const GridSpec& g, const BesselParams& p);
// (Delta_chi + c)^{-alpha/2} f; alpha = 0 returns f
Field bessel_apply(const Field& f, const BesselParams& p, ConvDiagnostics* diag = nullptr);

namespace line {

// line kernel by subordination of the Gauss kernel
double bessel_kernel(double alpha, double c, double x);
// 2 (4 pi)^{-1/2} Gamma(alpha/2)^{-1} (x^2 / 4c)^{nu/2} K_nu(sqrt(c) |x|), nu = (alpha - 1)/2
double bessel_kernel_closed(double alpha, double c, double x);
std::shared_ptr<const RadialProfile> bessel_table(double alpha, double c, double r_max);
LineField bessel_apply(const LineField& f, double alpha, double c);

}  // namespace line

}  // namespace driftlab
