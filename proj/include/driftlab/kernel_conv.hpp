#pragma once

// Convolution with kernels of the form K(z) = k(|z|) a_z^beta.
//
// f * K (x) = int f(w) K(w^{-1} x) dlambda(w). For rows s_j (of x) and s_l (of w) the
// kernel depends on x - x_w only, so the sum splits into n_s^2 one-dimensional
// Toeplitz products: evaluated directly or by FFT with the same kernel samples.
//
// The self term is replaced by a per-row weight D_j: the exact integral of K times a
// smooth window of radius rho_j minus the lattice sum of the same windowed kernel.
// This handles singular and under-resolved kernels and keeps the discrete operator
// symmetric in L^2(mu(2 beta + 1)).

#include "driftlab/grid.hpp"
#include "driftlab/radial.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace driftlab {

struct GroupKernel {
  std::function<double(double)> radial;  // k(r), r > 0
  double beta = 0.0;
  double mass = std::numeric_limits<double>::quiet_NaN();  // int K drho when known
  std::string label;
};

// int K(z) W(|z|) drho(z) for the smooth window of radius rho.
double windowed_integral(const GroupKernel& K, double rho);

class KernelOperator {
 public:
  struct Options {
    double window_factor = 4.0;  // rho_j = factor * max(h_x e^{-s_j}, h_s)
    bool cache_spectra = false;
  };

  KernelOperator(GroupKernel K, const GridSpec& g);
  KernelOperator(GroupKernel K, const GridSpec& g, Options opt);

  template <typename Scalar>
  GridFunction<Scalar> apply(const GridFunction<Scalar>& f) const;

  // several inputs sharing the kernel spectra
  std::vector<Field> apply_many(const std::vector<Field>& fs) const;

  // O(N^2) reference path with the same kernel samples
  Field apply_direct(const Field& f) const;

  const Eigen::ArrayXd& diagonal() const { return D_; }
  const GridSpec& grid() const { return grid_; }
  const GroupKernel& kernel() const { return K_; }

  // 1 - (discrete kernel mass seen at x) / (exact mass), maximised over nodes where
  // |f| >= 1e-3 max|f|. NaN when the exact mass is unknown.
  double truncation_mass(const Field& f) const;

 private:
  std::vector<std::complex<double>> row_kernel(int j, int l) const;
  void transform(const std::vector<std::vector<std::vector<std::complex<double>>>>& Fhat,
                 std::vector<std::vector<std::vector<std::complex<double>>>>& Shat) const;
  template <typename Scalar>
  std::vector<std::vector<std::complex<double>>> weighted_rows(const GridFunction<Scalar>& f) const;

  GroupKernel K_;
  GridSpec grid_;
  Options opt_;
  int L_ = 0;  // FFT length
  Eigen::ArrayXd D_;
  mutable std::mutex mu_;
  mutable std::vector<std::vector<std::complex<double>>> spectra_;  // pair (j <= l) spectra when cached
  mutable bool spectra_ready_ = false;
  mutable std::shared_ptr<Field> ones_;
};

// Process-wide cache of operators keyed by a caller-provided label and the grid.
std::shared_ptr<const KernelOperator> cached_operator(const std::string& key, const GridSpec& g,
                                                      const std::function<GroupKernel()>& make,
                                                      bool cache_spectra = false);

}  // namespace driftlab
