#pragma once

#include "hmor/skeleton.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace hmor::cli {

inline constexpr const char* kSceneSchema = "hmor-scene/1";

/// Parses a scene document. Unknown fields and wrong schema versions throw
/// InvalidInput naming the offending path.
Scene scene_from_json(const nlohmann::json& doc);
nlohmann::ordered_json scene_to_json(const Scene& scene);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& scene);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hmor::cli
