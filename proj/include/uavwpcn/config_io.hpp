#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "uavwpcn/core_types.hpp"

namespace uavwpcn {

// Field names mirror WorldConfig members; nested groups are JSON objects.
// Absent keys keep their defaults, unknown keys throw std::invalid_argument.
nlohmann::json config_to_json(const WorldConfig& config);
WorldConfig config_from_json(const nlohmann::json& doc, WorldConfig base = {});

WorldConfig load_config(const std::filesystem::path& path, WorldConfig base = {});
void save_config(const WorldConfig& config, const std::filesystem::path& path);

}  // namespace uavwpcn
