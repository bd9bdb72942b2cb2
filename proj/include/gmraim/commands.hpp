#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gmraim/config.hpp"

namespace gmraim {

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> backend;
};

/// Loads, overrides and validates; throws before any work is done.
ScenarioConfig resolve_config(const CommandOptions& options);

// Each stage writes `<output_dir>/<stage>/` with a manifest.json. Outputs
// are staged in a temporary directory and moved into place on success.
void cmd_gen_scene(const ScenarioConfig& config);   // scene/
void cmd_inject(const ScenarioConfig& config);      // attacks/
void cmd_detect(const ScenarioConfig& config);      // detect/
void cmd_evaluate(const ScenarioConfig& config);    // evaluate/
/// All four stages plus `<output_dir>/manifest.json` over every file.
void cmd_reproduce(const ScenarioConfig& config);

}  // namespace gmraim
