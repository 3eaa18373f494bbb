#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "snapkit/model.hpp"

namespace snapkit {

struct FrameworkFile {
    Framework framework;
    Configuration configuration;
};

/// Reads a framework JSON file. The "configuration" member is optional and
/// defaults to the declared knot coordinates.
FrameworkFile load_framework(const std::filesystem::path& path);
FrameworkFile parse_framework(const nlohmann::json& doc);
FrameworkFile parse_framework(const std::string& text);

nlohmann::json framework_to_json(const Framework& fw, const Configuration& cfg);
void save_framework(const std::filesystem::path& path, const Framework& fw,
                    const Configuration& cfg);

nlohmann::json configuration_to_json(const Configuration& cfg);
Configuration configuration_from_json(const nlohmann::json& rows, int dimension);

}  // namespace snapkit
