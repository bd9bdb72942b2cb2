#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gmraim/commands.hpp"
#include "gmraim/error.hpp"

int main(int argc, char** argv) {
  using namespace gmraim;
  CLI::App app{"Rogue Wi-Fi AP detection and exclusion from RSSI traces"};
  app.require_subcommand(1);

  CommandOptions options;
  std::string config, out, backend;
  std::uint64_t seed = 0;
  int workers = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "scenario seed");
    sub->add_option("--workers", workers, "trace-level worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--backend", backend, "positioning backend")
        ->check(CLI::IsMember({"fingerprint", "distance"}));
  };

  const std::map<std::string, std::function<void(const ScenarioConfig&)>> commands{
      {"gen-scene", cmd_gen_scene}, {"inject", cmd_inject},   {"detect", cmd_detect},
      {"evaluate", cmd_evaluate},   {"reproduce", cmd_reproduce},
  };
  const std::map<std::string, std::string> help{
      {"gen-scene", "generate AP layout, trajectory, benign traces and fingerprint database"},
      {"inject", "inject the configured attack suite into the scene"},
      {"detect", "calibrate detectors and write per-timestamp verdicts"},
      {"evaluate", "compute ROC, exclusion, recovery and sampling tables"},
      {"reproduce", "run every stage in order"},
  };
  for (const auto& [name, _] : commands) add_common(app.add_subcommand(name, help.at(name)));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto& [name, run] : commands) {
      CLI::App* sub = app.get_subcommand(name);
      if (!sub->parsed()) continue;
      if (sub->count("--config")) options.config = config;
      if (sub->count("--out")) options.out = out;
      if (sub->count("--seed")) options.seed = seed;
      if (sub->count("--workers")) options.workers = workers;
      if (sub->count("--backend")) options.backend = backend;
      run(resolve_config(options));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "gmraim: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gmraim: %s\n", e.what());
    return 1;
  }
  return 0;
}
