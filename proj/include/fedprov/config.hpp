#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fedprov/harness.hpp"

namespace fedprov {

/// JSON experiment config. Every key is optional and falls back to the
/// ExperimentConfig default; unknown keys are rejected with ValidationError.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Accepts either a bare generator object or a document with a "generator" key.
GeneratorConfig parse_generator_config(std::string_view json_text);
GeneratorConfig load_generator_config(const std::filesystem::path& path);

/// Full config including defaults, pretty-printed.
std::string to_json_string(const ExperimentConfig& cfg);

}  // namespace fedprov
