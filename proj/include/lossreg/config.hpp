#pragma once

// JSON-syntax experiment configuration. Sections: dataset, network,
// regularizer, optimizer, protocol. Dotted-key overrides ("regularizer.alpha_pct=10")
// are applied after the file is parsed; unknown keys are errors.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lossreg/harness.hpp"

namespace lossreg::config {

/// Syntax errors carry the 1-based line of the failure.
struct SyntaxError : ConfigError {
  SyntaxError(const std::string& what, std::size_t line) : ConfigError(what), line(line) {}
  std::size_t line;
};
struct UnknownKeyError : ConfigError {
  using ConfigError::ConfigError;
};
struct ConstraintError : ConfigError {
  using ConfigError::ConfigError;
};

using Override = std::pair<std::string, std::string>;

/// Splits "a.b=value".
Override parse_override(const std::string& text);

harness::ExperimentConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides = {},
                                            const std::filesystem::path& base_dir = {});
harness::ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides = {});

/// Sorted-key, fixed-format serialization of every field that affects results.
std::string canonical_json(const harness::ExperimentConfig& cfg);
/// 16 hex digits of FNV-1a over canonical_json.
std::string config_digest(const harness::ExperimentConfig& cfg);

}  // namespace lossreg::config
