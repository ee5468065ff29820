#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "secvm/netsim.hpp"

namespace secvm {

struct LoadedScenario {
  Scenario scenario;
  nlohmann::json resolved;                   // every field with defaults filled in
  std::vector<std::filesystem::path> inputs;  // dataset files the scenario pulls in
};

// Flat JSON object (see README for the schema). Relative dataset paths resolve
// against base_dir. Unknown or ill-typed fields raise ConfigError naming them.
LoadedScenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
LoadedScenario load_scenario(const std::filesystem::path& path);

}  // namespace secvm
