#include "driftlab/kernel_conv.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/quadrature.hpp"
#include "driftlab/smooth.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

namespace driftlab {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

namespace {

// ln A_nu(r) tabulated once per exponent; A_nu is smooth and slowly varying in log.
double angular_moment_cached(double r, double nu) {
  constexpr double dr = 0.004, r_max = 40.0;
  static std::mutex m;
  static std::map<double, std::shared_ptr<const UniformMonotoneCubic>> tables;
  std::shared_ptr<const UniformMonotoneCubic> tab;
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = tables.find(nu);
    if (it != tables.end()) tab = it->second;
  }
  if (!tab) {
    const int n = static_cast<int>(r_max / dr) + 1;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] = std::log(angular_moment(k * dr, nu));
    tab = std::make_shared<const UniformMonotoneCubic>(0.0, dr, std::move(y));
    std::lock_guard<std::mutex> lock(m);
    tables[nu] = tab;
  }
  if (r >= r_max) return angular_moment(r, nu);
  return std::exp((*tab)(r));
}

}  // namespace

double windowed_integral(const GroupKernel& K, double rho) {
  const double nu = K.beta + 1.0;
  auto f = [&](double r) {
    if (r <= 0.0) return 0.0;
    return K.radial(r) * smooth_window(r, rho) * std::sinh(r) * angular_moment_cached(r, nu);
  };
  return quad::origin_singular(f, rho, 1e-9);
}

namespace {

inline double row_distance(double dx, double sj, double sl) {
  const double sh = std::sinh(0.5 * (sj - sl));
  const double u = 2.0 * sh * sh + 0.5 * dx * dx * std::exp(-(sj + sl));
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

int fft_length(int n) {
  int L = 1;
  while (L < 2 * n) L *= 2;
  return L;
}

}  // namespace

KernelOperator::KernelOperator(GroupKernel K, const GridSpec& g) : KernelOperator(std::move(K), g, Options{}) {}

KernelOperator::KernelOperator(GroupKernel K, const GridSpec& g, Options opt)
    : K_(std::move(K)), grid_(g), opt_(opt) {
  if (g.chart != Chart::Affine) throw ParameterError("KernelOperator: affine chart only");
  L_ = fft_length(g.n_x);
  const double hx = g.hx(), hs = g.hs();
  D_.resize(g.n_s);
  for (int j = 0; j < g.n_s; ++j) {
    const double sj = g.s(j);
    const double rho = opt_.window_factor * std::max(hx * std::exp(-sj), hs);
    double lattice = 0.0;
    const int dl_max = static_cast<int>(std::ceil(rho / hs));
    for (int dl = -dl_max; dl <= dl_max; ++dl) {
      const double sl = sj + dl * hs;
      // |dx| bound from d < rho: dx^2 <= 2 e^{sj+sl} (cosh rho - cosh(ds))
      const double room = 2.0 * std::exp(sj + sl) * (std::cosh(rho) - std::cosh(dl * hs));
      if (room <= 0.0) continue;
      const int di_max = static_cast<int>(std::ceil(std::sqrt(room) / hx));
      const double wrow = std::exp(K_.beta * (sj - sl)) * std::exp(-sl) * hx * hs;
      for (int di = -di_max; di <= di_max; ++di) {
        if (dl == 0 && di == 0) continue;
        const double d = row_distance(di * hx, sj, sl);
        if (d >= rho) continue;
        lattice += K_.radial(d) * smooth_window(d, rho) * wrow;
      }
    }
    D_(j) = windowed_integral(K_, rho) - lattice;
  }
}

CVec KernelOperator::row_kernel(int j, int l) const {
  const GridSpec& g = grid_;
  CVec kv(static_cast<std::size_t>(L_), cplx(0.0));
  const double sj = g.s(j), sl = g.s(l), hx = g.hx();
  bool any = false;
  for (int k = 0; k < g.n_x; ++k) {
    if (j == l && k == 0) continue;
    const double v = K_.radial(row_distance(k * hx, sj, sl));
    if (v == 0.0) continue;
    any = true;
    kv[static_cast<std::size_t>(k)] = v;
    if (k > 0) kv[static_cast<std::size_t>(L_ - k)] = v;
  }
  if (!any) kv.clear();
  return kv;
}

template <typename Scalar>
std::vector<CVec> KernelOperator::weighted_rows(const GridFunction<Scalar>& f) const {
  const Eigen::ArrayXXd w = quadrature_weights(grid_, MeasureTag::Lambda());
  std::vector<CVec> rows(static_cast<std::size_t>(grid_.n_s), CVec(static_cast<std::size_t>(L_), cplx(0.0)));
  for (int l = 0; l < grid_.n_s; ++l)
    for (int m = 0; m < grid_.n_x; ++m) rows[l][m] = cplx(f.values(m, l)) * w(m, l);
  return rows;
}

void KernelOperator::transform(const std::vector<std::vector<CVec>>& Fhat, std::vector<std::vector<CVec>>& Shat) const {
  const GridSpec& g = grid_;
  const int ns = g.n_s;
  const std::size_t nf = Fhat.size();
  Eigen::FFT<double> fft;
  Shat.assign(nf, std::vector<CVec>(static_cast<std::size_t>(ns), CVec(static_cast<std::size_t>(L_), cplx(0.0))));

  std::lock_guard<std::mutex> lock(mu_);
  const bool build_cache = opt_.cache_spectra && !spectra_ready_;
  if (build_cache) spectra_.assign(static_cast<std::size_t>(ns * (ns + 1) / 2), CVec{});
  std::size_t pair = 0;
  CVec khat;
  for (int j = 0; j < ns; ++j) {
    for (int l = j; l < ns; ++l, ++pair) {
      const CVec* kh = nullptr;
      if (opt_.cache_spectra && spectra_ready_) {
        kh = &spectra_[pair];
      } else {
        CVec kv = row_kernel(j, l);
        if (kv.empty()) {
          khat.clear();
        } else {
          fft.fwd(khat, kv);
        }
        if (build_cache) spectra_[pair] = khat;
        kh = &khat;
      }
      if (kh->empty()) continue;
      const double cjl = std::exp(K_.beta * (g.s(j) - g.s(l)));
      const double clj = 1.0 / cjl;
      for (std::size_t q = 0; q < nf; ++q) {
        CVec& Sj = Shat[q][j];
        const CVec& Fl = Fhat[q][l];
        for (int k = 0; k < L_; ++k) Sj[k] += cjl * (*kh)[k] * Fl[k];
        if (l != j) {
          CVec& Sl = Shat[q][l];
          const CVec& Fj = Fhat[q][j];
          for (int k = 0; k < L_; ++k) Sl[k] += clj * (*kh)[k] * Fj[k];
        }
      }
    }
  }
  if (build_cache) spectra_ready_ = true;
}

template <typename Scalar>
GridFunction<Scalar> KernelOperator::apply(const GridFunction<Scalar>& f) const {
  if (!(f.spec == grid_)) throw ParameterError("KernelOperator::apply: grid mismatch");
  if (!f.finite()) throw DomainError("KernelOperator::apply: non-finite input");
  Eigen::FFT<double> fft;
  std::vector<std::vector<CVec>> Fhat(1);
  auto rows = weighted_rows(f);
  Fhat[0].resize(rows.size());
  for (std::size_t l = 0; l < rows.size(); ++l) fft.fwd(Fhat[0][l], rows[l]);
  std::vector<std::vector<CVec>> Shat;
  transform(Fhat, Shat);
  GridFunction<Scalar> out(grid_);
  CVec buf;
  for (int j = 0; j < grid_.n_s; ++j) {
    fft.inv(buf, Shat[0][j]);
    for (int i = 0; i < grid_.n_x; ++i) {
      const cplx v = buf[i] + D_(j) * cplx(f.values(i, j));
      if constexpr (std::is_same_v<Scalar, double>)
        out.values(i, j) = v.real();
      else
        out.values(i, j) = v;
    }
  }
  return out;
}

std::vector<Field> KernelOperator::apply_many(const std::vector<Field>& fs) const {
  Eigen::FFT<double> fft;
  std::vector<std::vector<CVec>> Fhat(fs.size());
  for (std::size_t q = 0; q < fs.size(); ++q) {
    if (!(fs[q].spec == grid_)) throw ParameterError("KernelOperator::apply_many: grid mismatch");
    auto rows = weighted_rows(fs[q]);
    Fhat[q].resize(rows.size());
    for (std::size_t l = 0; l < rows.size(); ++l) fft.fwd(Fhat[q][l], rows[l]);
  }
  std::vector<std::vector<CVec>> Shat;
  transform(Fhat, Shat);
  std::vector<Field> out;
  CVec buf;
  for (std::size_t q = 0; q < fs.size(); ++q) {
    Field o(grid_);
    for (int j = 0; j < grid_.n_s; ++j) {
      fft.inv(buf, Shat[q][j]);
      for (int i = 0; i < grid_.n_x; ++i) o.values(i, j) = buf[i].real() + D_(j) * fs[q].values(i, j);
    }
    out.push_back(std::move(o));
  }
  return out;
}

Field KernelOperator::apply_direct(const Field& f) const {
  if (!(f.spec == grid_)) throw ParameterError("KernelOperator::apply_direct: grid mismatch");
  const GridSpec& g = grid_;
  const int nx = g.n_x, ns = g.n_s;
  auto rows = weighted_rows(f);
  Field out(g);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < ns; ++j) {
    std::vector<double> acc(static_cast<std::size_t>(nx), 0.0);
    for (int l = 0; l < ns; ++l) {
      const CVec kv = row_kernel(j, l);
      if (kv.empty()) continue;
      const double c = std::exp(K_.beta * (g.s(j) - g.s(l)));
      for (int i = 0; i < nx; ++i) {
        double s = 0.0;
        for (int m = 0; m < nx; ++m) s += kv[static_cast<std::size_t>(std::abs(i - m))].real() * rows[l][m].real();
        acc[i] += c * s;
      }
    }
    for (int i = 0; i < nx; ++i) out.values(i, j) = acc[i] + D_(j) * f.values(i, j);
  }
  return out;
}

double KernelOperator::truncation_mass(const Field& f) const {
  if (!std::isfinite(K_.mass)) return std::numeric_limits<double>::quiet_NaN();
  std::shared_ptr<Field> ones;
  {
    std::lock_guard<std::mutex> lock(mu_);
    ones = ones_;
  }
  if (!ones) {
    Field one(grid_);
    one.values.setOnes();
    ones = std::make_shared<Field>(apply(one));
    std::lock_guard<std::mutex> lock(mu_);
    ones_ = ones;
  }
  const double fmax = f.values.abs().maxCoeff();
  double worst = 0.0;
  for (int j = 0; j < grid_.n_s; ++j)
    for (int i = 0; i < grid_.n_x; ++i)
      if (std::abs(f.values(i, j)) >= 1e-3 * fmax) worst = std::max(worst, 1.0 - ones->values(i, j) / K_.mass);
  return std::max(worst, 0.0);
}

template Field KernelOperator::apply<double>(const Field&) const;
template CField KernelOperator::apply<cplx>(const CField&) const;

std::shared_ptr<const KernelOperator> cached_operator(const std::string& key, const GridSpec& g,
                                                      const std::function<GroupKernel()>& make, bool cache_spectra) {
  static std::mutex m;
  static std::map<std::string, std::shared_ptr<const KernelOperator>> cache;
  static std::deque<std::string> order;
  constexpr std::size_t capacity = 24;
  const std::string full = key + '|' + g.to_json() + (cache_spectra ? "|spectra" : "");
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(full);
    if (it != cache.end()) return it->second;
  }
  KernelOperator::Options opt;
  opt.cache_spectra = cache_spectra;
  auto op = std::make_shared<const KernelOperator>(make(), g, opt);
  std::lock_guard<std::mutex> lock(m);
  cache[full] = op;
  order.push_back(full);
  while (order.size() > capacity) {
    cache.erase(order.front());
    order.pop_front();
  }
  return op;
}

}  // namespace driftlab
