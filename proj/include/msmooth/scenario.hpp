#pragma once

#include <filesystem>
#include <string>

#include "msmooth/sim.hpp"

namespace msmooth {

// Reads a scenario file; absent keys keep default_scenario() values.
// Malformed content throws ConfigError, a missing file IoError.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& json_text);
std::string scenario_to_json(const ScenarioConfig& cfg);

}  // namespace msmooth
