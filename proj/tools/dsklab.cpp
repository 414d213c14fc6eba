#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "dsk/runner.hpp"

namespace {

void print_selftest(const std::filesystem::path& outDir) {
  const dsk::Json report = dsk::read_json(outDir / "selftest.json");
  if (!report.contains("result")) return;
  for (const auto& c : report["result"]["checks"])
    std::printf("%-30s %-24s %-10s %s\n", c["name"].get<std::string>().c_str(),
                dsk::format_number(c["value"].get<double>()).c_str(),
                dsk::format_number(c["tolerance"].get<double>()).c_str(), c["pass"].get<bool>() ? "PASS" : "FAIL");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Klein-Gordon fields on De Sitter Kerr: mode evolution, spectra and scattering"};
  std::string command, configPath, outDir;
  int threads = 0;
  long long seed = -1;
  app.add_option("command", command, "geometry | assemble | spectrum | resonance-scan | evolve | superradiance | scatter | selftest")
      ->required();
  app.add_option("--config", configPath, "JSON configuration overlaid on the command defaults");
  app.add_option("--out", outDir, "output directory");
  app.add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for random ensembles")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  dsk::RunConfig cfg;
  try {
    const auto& names = dsk::command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
      throw dsk::ValidationError("ConfigInvalid", "unknown command '" + command + "'");
    const dsk::Json doc = configPath.empty() ? dsk::Json() : dsk::read_json(configPath);
    cfg = dsk::parse_config(command, doc);
  } catch (const dsk::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (!outDir.empty()) cfg.outDir = outDir;
  if (threads > 0) cfg.threads = threads;
  if (seed >= 0) cfg.seed = unsigned(seed);

  const dsk::RunOutcome out = dsk::run(cfg);
  if (command == "selftest" && out.errorName != "ConfigInvalid") {
    try {
      print_selftest(cfg.outDir);
    } catch (const dsk::Error&) {
    }
  }
  if (out.exitCode != 0)
    std::cerr << out.message << "\n";
  else
    std::cout << command << ": ok\n";
  return out.exitCode;
}
