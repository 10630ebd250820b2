#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "treenet/cascade.hpp"

namespace treenet {

/// Model file format version written by save_model. load_model accepts
/// exactly this version.
inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "treenet.cascade";

nlohmann::ordered_json to_json(const CascadeConfig& config);

/// Reads a permissive key-value mapping: every key is optional (missing
/// keys keep the value from `defaults`) and an unknown key throws
/// InvalidConfig naming it.
CascadeConfig cascade_config_from_json(const nlohmann::json& object, const CascadeConfig& defaults = {});

std::string serialize_model(const CascadeModel& model);

/// Throws UnsupportedVersion for any format_version other than
/// kModelFormatVersion, SchemaViolation (with a JSON-pointer style path)
/// for malformed documents.
CascadeModel deserialize_model(const std::string& text);

void save_model(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_model(const std::filesystem::path& path);

}  // namespace treenet
