#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "matchq/model.hpp"

namespace matchq {

/// Reads a JSON instance file. Parse failures and schema errors surface as
/// ConfigError; the message carries the parser's line/column when available.
SystemConfig load_config(const std::filesystem::path& path);
SystemConfig config_from_json(const nlohmann::json& doc);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace matchq
