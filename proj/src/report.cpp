#include "driftlab/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace driftlab {

void ScanReport::check(const std::string& what, bool ok, const std::string& detail) {
  checks.push_back({what, ok, detail});
}

bool ScanReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json ScanReport::to_json() const {
  Json j;
  j["name"] = name;
  j["params"] = params;
  j["values"] = values;
  j["refinement_ratio"] = number(refinement_ratio);
  j["truncation_mass"] = number(truncation_mass);
  Json cs = Json::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = cs;
  j["pass"] = pass();
  if (!warnings.empty()) j["warnings"] = warnings;
  if (!columns.empty()) {
    Json t;
    t["columns"] = columns;
    Json rs = Json::array();
    for (const auto& r : rows) {
      Json row = Json::array();
      for (double v : r) row.push_back(number(v));
      rs.push_back(row);
    }
    t["rows"] = rs;
    j["table"] = t;
  }
  return j;
}

std::string ScanReport::csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
    os << '\n';
  }
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need two or more matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= double(n), my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
  LineFit F;
  F.slope = sxy / sxx;
  F.intercept = my - F.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - F.intercept - F.slope * x[i];
      rss += e * e;
    }
    F.half_width = 2.0 * std::sqrt(rss / double(n - 2) / sxx);
  }
  return F;
}

}  // namespace driftlab
