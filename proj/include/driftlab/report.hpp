#pragma once

// Structured results shared by every scan, with JSON and CSV writers.

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace driftlab {

using Json = nlohmann::ordered_json;

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct ScanReport {
  std::string name;
  Json params = Json::object();
  // summary numbers in insertion order
  Json values = Json::object();
  double refinement_ratio = std::numeric_limits<double>::quiet_NaN();
  double truncation_mass = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Check> checks;
  std::vector<std::string> warnings;

  void check(const std::string& what, bool ok, const std::string& detail = {});
  bool pass() const;
  Json to_json() const;
  std::string csv() const;
};

// Finite numbers as numbers, everything else as a string ("nan", "inf").
Json number(double v);

// Write through a temporary file and rename, so readers never see partial output.
void write_atomic(const std::string& path, const std::string& content);

std::string fnv1a_hex(const std::string& text);

// Least squares y = intercept + slope x; half_width is twice the slope's standard error
// (zero for two points).
struct LineFit {
  double slope = 0.0, intercept = 0.0, half_width = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace driftlab
