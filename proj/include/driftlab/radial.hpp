#pragma once

// Tabulated radial profiles k(r) > 0 with O(1) lookup.
//
// Values are stored as logarithms and interpolated by a monotone cubic Hermite
// scheme (three-point slopes, Fritsch-Carlson limiting) on uniform nodes. Singular
// profiles get an extra table in ln r close to the origin.

#include <functional>
#include <limits>
#include <ostream>
#include <vector>

namespace driftlab {

class UniformMonotoneCubic {
 public:
  UniformMonotoneCubic() = default;
  UniformMonotoneCubic(double x0, double dx, std::vector<double> y);

  double operator()(double x) const;
  double front_slope() const { return m_.front(); }
  double back_slope() const { return m_.back(); }
  double x_begin() const { return x0_; }
  double x_end() const { return x0_ + dx_ * static_cast<double>(y_.size() - 1); }
  std::size_t size() const { return y_.size(); }
  double node_value(std::size_t k) const { return y_[k]; }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> y_, m_;
};

class RadialProfile {
 public:
  struct Layout {
    double r_hi = 10.0;  // end of the table
    double dr = 0.01;    // linear-region spacing
    // optional ln r region [r_lo, r_switch] for profiles singular at 0
    double r_lo = 0.0;
    double r_switch = 0.0;
    int per_decade = 40;
    // known leading power p at the origin (0: logarithmic). Below r_lo the
    // profile continues as a r^p + b (a ln r + b), matched at the first two nodes.
    // NaN: continue with the fitted local power.
    double origin_power = std::numeric_limits<double>::quiet_NaN();
  };

  RadialProfile() = default;
  // fn(r) must be positive where finite; a zero marks underflow and ends the table.
  static RadialProfile build(const std::function<double(double)>& fn, const Layout& layout);

  double operator()(double r) const;
  double r_end() const { return r_end_; }
  bool singular() const { return has_log_; }
  // d ln k / d ln r below the ln-region (the fitted local power)
  double origin_power() const { return origin_power_; }

  void write_csv_rows(std::ostream& os, double t_label, int stride = 1) const;

 private:
  bool has_log_ = false;
  double r_lo_ = 0.0, r_sw_ = 0.0, r_end_ = 0.0;
  bool tail_zero_ = true;
  double tail_slope_ = 0.0;
  double origin_power_ = 0.0;
  bool origin_fit_ = false;
  double origin_a_ = 0.0, origin_b_ = 0.0;
  UniformMonotoneCubic log_region_, lin_region_;
};

}  // namespace driftlab
