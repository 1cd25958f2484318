#pragma once

// The batteries behind the command-line subcommands. Each returns its reports in a fixed
// order; nothing here touches the file system.

#include "driftlab/grid.hpp"
#include "driftlab/pde.hpp"
#include "driftlab/report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

inline constexpr const char* kReportSchema = "driftlab.report/1";

// Versions of the library modules, embedded in every report.
Json module_versions();

struct RunConfig {
  GroupKind group = GroupKind::AxB;
  // empty lists select the battery's own sets
  std::vector<double> gammas;
  std::vector<double> ps;
  std::vector<double> alphas;
  std::vector<double> times;  // heat only
  double c = std::numeric_limits<double>::quiet_NaN();
  std::optional<GridSpec> grid;
  std::uint64_t seed = 1;

  // pde: a single configured problem instead of the battery when amplitude is set
  std::optional<double> amplitude;
  double tau = 0.5;
  PdeKind kind = PdeKind::heat;

  // throws ParameterError
  void validate() const;
  Json to_json() const;
  std::string hash() const;  // FNV-1a of to_json().dump()
};

// "xmax" and "smax" give the rectangle [-xmax, xmax] x [-smax, smax].
GridSpec parse_grid(const std::string& text);

std::vector<ScanReport> heat_battery(const RunConfig& cfg);
std::vector<ScanReport> sobolev_battery(const RunConfig& cfg);
std::vector<ScanReport> embed_battery(const RunConfig& cfg);
std::vector<ScanReport> counterexample_battery(const RunConfig& cfg);

// The battery, the composition scans, or the configured problem (may throw WindowRefusal).
struct PdeRun {
  std::vector<ScanReport> reports;
  std::optional<SolutionTrajectory> trajectory;
};
PdeRun pde_run(const RunConfig& cfg);

// Wraps a report with the config, its hash, module versions and the generator name.
// The timestamp is the only field that differs between identical runs.
Json report_document(const ScanReport& R, const RunConfig& cfg, const std::string& timestamp);

}  // namespace driftlab
