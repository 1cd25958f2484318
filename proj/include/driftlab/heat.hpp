#pragma once

// Heat kernels of the drifted sub-Laplacians on ax+b.
//
// Anchor: McKean's closed form h_t(r) of the hyperbolic plane, which is the kernel of
// Delta_delta (gamma = 1). The chain
//   p_t = e^{t/4} h_t delta^{1/2},   p_t^{delta^gamma} = e^{-t gamma^2 / 4} p_t delta^{-gamma/2}
// gives p_t^gamma(z) = e^{t(1 - gamma^2)/4} h_t(|z|) a^{(gamma - 1)/2}.

#include "driftlab/grid.hpp"
#include "driftlab/kernel_conv.hpp"
#include "driftlab/radial.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace driftlab {

double hyperbolic_kernel(double t, double r);
// Upper bound for the part of McKean's integral cut off beyond r + 12 sqrt(t).
double hyperbolic_kernel_tail_bound(double t, double r);

class HeatKernelModel {
 public:
  explicit HeatKernelModel(double gamma, double r_max = 12.0);

  double gamma() const { return gamma_; }
  double beta() const { return 0.5 * (gamma_ - 1.0); }
  double r_max() const { return r_max_; }

  // cached h_t table on [0, r_max]
  std::shared_ptr<const RadialProfile> table(double t) const;

  double p_t(double t, const GroupPoint& z) const;        // table lookup
  double p_t_direct(double t, const GroupPoint& z) const;  // McKean quadrature
  GroupKernel kernel(double t) const;

 private:
  double gamma_;
  double r_max_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const RadialProfile>> tables_;
};

double p_t_chi(const HeatKernelModel& model, double t, const GroupPoint& z);

// int p_t^gamma drho by adaptive quadrature in (x, s) on the exact kernel.
double heat_mass(double t, double gamma);

// Upper bound for distances between nodes of g.
double grid_diameter(const GridSpec& g);

std::shared_ptr<const KernelOperator> heat_operator(const GridSpec& g, double t, double gamma,
                                                    bool cache_spectra = false);

struct ConvDiagnostics {
  double truncation_mass = 0.0;
};

Field heat_apply(const Field& f, double t, double gamma, ConvDiagnostics* diag = nullptr);
CField heat_apply(const CField& f, double t, double gamma);

struct KernelBoundCertificate {
  std::vector<double> t_set;
  int m = 0;  // derivative order
  double omega = 0.0;
  double b = 0.0;
  double prefactor = 0.0;
  double max_violation = 0.0;  // max over samples of log(sample / envelope)
  double quadratic_r2 = 0.0;   // fit quality of log h_t against r^2
  bool success = false;
  std::string detail;
};

// Samples |X_J p_t^gamma| chi^{1/2} on a window of radius ~5 sqrt(t) resolved by n x n
// nodes, then fits C t^{-(d+m)/2} e^{omega t} e^{-b |z|^2 / t} from above with b >= 0.2.
KernelBoundCertificate certify_gaussian_bound(const HeatKernelModel& model, const std::vector<double>& t_set,
                                              int m, int n = 65);

// Generic envelope fit shared with the line baseline: samples[k] = (t, |z|^2, log value).
struct EnvelopeSample {
  double t, r2, log_value;
};
KernelBoundCertificate fit_envelope(const std::vector<EnvelopeSample>& samples, double dim_exponent);

// CSV rows (t, r, value) of the cached tables.
void export_kernel_csv(const HeatKernelModel& model, const std::vector<double>& t_set, const std::string& path);

}  // namespace driftlab
