#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsk/evolution.hpp"
#include "dsk/io.hpp"

namespace dsk {

struct ScanConfig {
  double lambdaMin = -3, lambdaMax = 3;
  int lambdaCount = 61;
  std::vector<double> deltas{0.8, 0.4, 0.2};
  int powerIterations = 20, restarts = 3;
};

struct ScatterConfig {
  std::string side = "left";           // left | right
  std::string comparison = "profile";  // profile | separable
  std::string op = "wave";             // wave | inverse
  std::string propagation = "discrete";
  std::vector<double> schedule{5, 10, 20, 40};
  double distance = 25;  // packet center at -distance (left) or +distance (right)
  double width = 2.5, waveNumber = 2.0, filterTime = 30;
  bool squaredCutoff = true;
  double margin = 1.0;
};

struct RunConfig {
  std::string command;
  SpacetimeParams params{0.03, 1.0, 0.05, 0.0};
  int n = 1, Nx = 199, Ntheta = 6, Q = 6, rwNodes = 801;
  double X = 40;
  double dt = 0.1, T = 20;
  int stride = 1;
  std::string weight = "q";  // q | cosh
  double weightEpsilon = 1.0;
  std::optional<double> cutoffEpsilon, cutoffRscale;  // X/8 and X/4 when unset
  DatumSpec datum;
  long budget = 6000;
  ScanConfig scan;
  ScatterConfig scatter;
  unsigned seed = 1;
  int threads = 1;
  std::filesystem::path outDir = "dsklab_out";
};

const std::vector<std::string>& command_names();

// Defaults depend on the command (scatter uses a wider grid).
RunConfig default_config(const std::string& command);
// Overlays a JSON document on the defaults; unknown keys and wrong types are ConfigInvalid.
RunConfig parse_config(const std::string& command, const Json& doc);
// Fully resolved configuration, every default spelled out.
Json config_json(const RunConfig& cfg);
void validate_config(const RunConfig& cfg);

struct RunOutcome {
  int exitCode = 0;  // 0 ok, 2 validation error, 3 numerical failure
  std::string errorName, message;
};

// Writes config.json, <command>.json and any CSV tables into cfg.outDir.
RunOutcome run(const RunConfig& cfg);

// The property suite behind the selftest command: one entry per check.
struct SelfCheck {
  std::string name;
  double value = 0, tolerance = 0;
  bool pass = false;
};
std::vector<SelfCheck> run_selftest(unsigned seed, int threads);

}  // namespace dsk
