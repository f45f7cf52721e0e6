#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "risu/experiments.hpp"

namespace risu {

inline constexpr int kConfigSchemaVersion = 1;

/// Builds an ExperimentSpec from a JSON document. The base profile is
/// `profile_override` if given, else the document's "profile" key, else
/// "desk"; every other key overrides a field of that profile. Unknown keys
/// and type mismatches raise ConfigError naming the key path.
ExperimentSpec parse_experiment_config(const nlohmann::json& doc,
                                       const std::optional<std::string>& profile_override = {});

/// Reads and parses a config file. A missing file raises ConfigError naming
/// the path.
ExperimentSpec load_experiment_config(const std::filesystem::path& path,
                                      const std::optional<std::string>& profile_override = {});

/// Fully resolved config; feeding it back through parse_experiment_config
/// reproduces the same spec.
nlohmann::json to_json(const ExperimentSpec& spec);

}  // namespace risu
