// driftlab: batch front end. Exit codes: 0 every check passed, 1 a check or certificate
// failed, 2 usage or parameter error (including a refused contraction window).

#include "driftlab/batteries.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/heat.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>

using namespace driftlab;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Output {
  fs::path dir;
  bool json = true, csv = true;
};

// <dir>/<command>/<NN>_<name>.json|csv plus summary.json; returns whether every report passed
bool write_reports(const std::string& command, const std::vector<ScanReport>& reports, const RunConfig& cfg,
                   const Output& out, const std::string& stamp) {
  const fs::path dir = out.dir / command;
  fs::create_directories(dir);
  Json index = Json::array();
  bool ok = true;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const ScanReport& R = reports[k];
    char prefix[8];
    std::snprintf(prefix, sizeof prefix, "%02zu_", k);
    const std::string stem = prefix + R.name;
    if (out.json) write_atomic((dir / (stem + ".json")).string(), report_document(R, cfg, stamp).dump(2) + "\n");
    if (out.csv) write_atomic((dir / (stem + ".csv")).string(), R.csv());
    Json failed = Json::array();
    for (const auto& c : R.checks)
      if (!c.pass) failed.push_back({{"check", c.name}, {"detail", c.detail}});
    index.push_back({{"file", stem}, {"name", R.name}, {"pass", R.pass()}, {"failed", failed}});
    ok = ok && R.pass();
  }
  Json summary = {{"schema", kReportSchema},     {"timestamp", stamp},
                  {"command", command},          {"config", cfg.to_json()},
                  {"config_hash", cfg.hash()},   {"module_versions", module_versions()},
                  {"pass", ok},                  {"reports", index}};
  write_atomic((dir / "summary.json").string(), summary.dump(2) + "\n");
  std::cout << command << ": " << reports.size() << " reports, " << (ok ? "pass" : "FAIL") << "\n";
  for (const auto& r : index)
    if (!r["pass"].get<bool>()) std::cout << "  failed: " << r["file"].get<std::string>() << " " << r["failed"].dump() << "\n";
  return ok;
}

// failure detail for runs that stop with an exception
void write_failure(const std::string& command, const std::string& kind, const std::string& what, const RunConfig& cfg,
                   const Output& out, const std::string& stamp, const Json& extra = Json::object()) {
  const fs::path dir = out.dir / command;
  fs::create_directories(dir);
  Json j = {{"schema", kReportSchema}, {"timestamp", stamp},       {"command", command}, {"config", cfg.to_json()},
            {"config_hash", cfg.hash()}, {"module_versions", module_versions()}, {"pass", false},
            {"error", {{"kind", kind}, {"message", what}}}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j["error"][it.key()] = it.value();
  write_atomic((dir / "summary.json").string(), j.dump(2) + "\n");
  std::cerr << command << ": " << kind << ": " << what << "\n";
}

int run_command(const std::string& command, const RunConfig& cfg, const Output& out) {
  const std::string stamp = utc_now();
  try {
    cfg.validate();
    if (command == "heat") {
      const auto reports = heat_battery(cfg);
      const bool ok = write_reports(command, reports, cfg, out, stamp);
      if (out.csv) {
        std::vector<double> ts = cfg.times.empty() ? std::vector<double>{0.1, 0.5, 1.0} : cfg.times;
        for (double gamma : cfg.gammas.empty() ? std::vector<double>{0.0, 1.0, 2.0} : cfg.gammas)
          if (cfg.group == GroupKind::AxB) {
            char name[48];
            std::snprintf(name, sizeof name, "kernel_table_gamma%g.csv", gamma);
            export_kernel_csv(HeatKernelModel(gamma, 8.0), ts, (out.dir / command / name).string());
          }
      }
      return ok ? 0 : 1;
    }
    if (command == "sobolev") return write_reports(command, sobolev_battery(cfg), cfg, out, stamp) ? 0 : 1;
    if (command == "embed") return write_reports(command, embed_battery(cfg), cfg, out, stamp) ? 0 : 1;
    if (command == "counterexample") return write_reports(command, counterexample_battery(cfg), cfg, out, stamp) ? 0 : 1;
    if (command == "pde") {
      PdeRun run = pde_run(cfg);
      const bool ok = write_reports(command, run.reports, cfg, out, stamp);
      if (run.trajectory) export_trajectory(*run.trajectory, (out.dir / command / "trajectory").string());
      return ok ? 0 : 1;
    }
  } catch (const WindowRefusal& e) {
    write_failure(command, "window_refusal", e.what(), cfg, out, stamp, {{"c_tau", number(e.c_tau)}});
    return 2;
  } catch (const ParameterError& e) {
    write_failure(command, "parameter_error", e.what(), cfg, out, stamp);
    return 2;
  } catch (const ResolutionError& e) {
    write_failure(command, "resolution_error", e.what(), cfg, out, stamp);
    return 2;
  } catch (const TruncationError& e) {
    write_failure(command, "truncation_error", e.what(), cfg, out, stamp);
    return 2;
  } catch (const DomainError& e) {
    write_failure(command, "domain_error", e.what(), cfg, out, stamp);
    return 2;
  } catch (const ScientificFailure& e) {
    write_failure(command, "scientific_failure", e.what(), cfg, out, stamp);
    return 1;
  }
  throw ParameterError("unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drift-lab: sub-Laplacians with drift on the ax+b group"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string group = "axb", grid, format = "both", out_dir = "driftlab-out", kind = "heat";
  double c = std::numeric_limits<double>::quiet_NaN(), amplitude = std::numeric_limits<double>::quiet_NaN();

  auto common = [&](CLI::App* sub) {
    sub->add_option("--group", group, "axb or line")->check(CLI::IsMember({"axb", "line"}));
    sub->add_option("--gamma", cfg.gammas, "character exponents, comma separated")->delimiter(',');
    sub->add_option("--p", cfg.ps, "Lebesgue exponents")->delimiter(',');
    sub->add_option("--alpha", cfg.alphas, "smoothness indices")->delimiter(',');
    sub->add_option("--c", c, "spectral shift (default: the smallest admissible)");
    sub->add_option("--grid", grid, "nx,ns,xmax,smax");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "seed of the splitmix64 families");
    sub->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
  };
  std::vector<CLI::App*> subs;
  for (const char* name : {"heat", "sobolev", "embed", "counterexample", "pde", "all"}) {
    CLI::App* sub = app.add_subcommand(name);
    common(sub);
    subs.push_back(sub);
  }
  app.get_subcommand("heat")->add_option("--t", cfg.times, "heat times")->delimiter(',');
  app.get_subcommand("all")->add_option("--t", cfg.times, "heat times")->delimiter(',');
  CLI::App* pde = app.get_subcommand("pde");
  pde->add_option("--amplitude", amplitude, "run one Gaussian-data problem of this amplitude instead of the battery");
  pde->add_option("--tau", cfg.tau, "time horizon of the configured problem");
  pde->add_option("--kind", kind, "heat or schrodinger")->check(CLI::IsMember({"heat", "schrodinger"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Output out;
  out.dir = out_dir;
  out.json = format != "csv";
  out.csv = format != "json";
  cfg.group = group == "line" ? GroupKind::Line : GroupKind::AxB;
  cfg.c = c;
  if (!std::isnan(amplitude)) cfg.amplitude = amplitude;
  cfg.kind = kind == "schrodinger" ? PdeKind::schrodinger : PdeKind::heat;
  try {
    if (!grid.empty()) cfg.grid = parse_grid(grid);
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  if (command != "all") return run_command(command, cfg, out);
  int worst = 0;
  for (const char* name : {"heat", "sobolev", "embed", "counterexample", "pde"})
    worst = std::max(worst, run_command(name, cfg, out));
  return worst;
}
