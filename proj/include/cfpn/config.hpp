#pragma once

#include <filesystem>
#include <string>

#include "cfpn/trainer.hpp"

namespace cfpn {

/// Parses `key = value` lines ('#' starts a comment). Unset keys keep
/// their defaults; unknown keys throw ConfigError, bad values ParseError.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Every key with its value, in a form parse_config_text reads back exactly.
std::string format_config(const RunConfig& cfg);

}  // namespace cfpn
