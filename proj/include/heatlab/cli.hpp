#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "heatlab/asymptotics.hpp"
#include "heatlab/manifold.hpp"
#include "heatlab/report.hpp"

namespace heatlab {

struct ManifoldSpec {
  std::string kind = "circle";
  double L = 1.0;
  double a = 0.0;
  double b = 1.0;
  std::vector<double> potential;
  std::vector<double> metric{1.0};
  double metric_rate = 0.0;
};

Manifold1D build_manifold(const ManifoldSpec& spec);

/// One command with every parameter resolved. Fields left at their sentinel
/// (order < 0, tolerance <= 0, empty t and K) take command defaults.
struct RunConfig {
  std::string command;
  ManifoldSpec manifold;
  std::string backend = "auto";
  int grid_size = 2048;
  std::vector<double> t;
  double t_min = 0.0;
  double t_max = 0.0;
  int t_count = 0;
  std::vector<PointPair> K;
  double x = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();
  int order = -1;
  double tolerance = 0.0;
  std::uint64_t seed = 1;
  std::size_t paths = 100000;
  double dt = 0.0;
  double radius = 0.5;
  int bins = 20;
  double split = 0.4;
  ClosedSet A;
  std::vector<double> U;
  bool bridge = false;
  bool search = false;
  std::string preset;
  std::string out;
  std::string format = "json";
};

extern const std::vector<std::string> kCommands;
extern const std::vector<std::string> kPresets;

/// Strict parse: unknown fields raise ConfigError.
RunConfig parse_run_config(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const RunConfig& c);
/// Fills command defaults (grid, K, order, tolerance, ...).
RunConfig resolve(RunConfig c);

/// Named entries of a suite preset.
struct SuiteEntry {
  std::string name;
  RunConfig config;
};
std::vector<SuiteEntry> preset_entries(const std::string& preset);

/// Runs one resolved command (or suite) and assembles the report.
Report execute(const RunConfig& config, int threads = 0);

/// Exit code for an error kind: 2 for misuse, 3 for numerical breakdown.
int exit_code_for(ErrorKind kind);

/// Command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace heatlab
