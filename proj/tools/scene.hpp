#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aae/geometry.hpp"
#include "aae/image.hpp"
#include "json.hpp"

namespace aae::cli {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

/// One object instance in a scene.
struct SceneObject {
  std::string id = "obj";
  Posed gt_pose;
  std::optional<BBox> bbox;
};

/// Scene descriptor (`*.scene.json`). Paths inside the file are relative to
/// the file's directory and resolved on load.
///
///   {
///     "schema_version": 1,
///     "mesh": "object.obj",
///     "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": .., "width": .., "height": ..},
///     "image": "scene_000.png",          16-bit PNG, depth in mm, encoder input
///     "depth": "scene_000.depth",        optional raw f32 depth for ICP / VSD
///     "objects": [{"id": "obj",
///                  "gt_pose": {"rotation": [9 values, row-major], "translation": [x, y, z]},
///                  "bbox": [x, y, w, h]}]   bbox optional
///   }
struct SceneDescriptor {
  std::filesystem::path path;
  std::filesystem::path mesh;
  Intrinsicsd intrinsics;
  std::filesystem::path image;
  std::optional<std::filesystem::path> depth;
  std::vector<SceneObject> objects;
};

SceneDescriptor load_scene(const std::filesystem::path& path);
void save_scene(const SceneDescriptor& scene, const std::filesystem::path& path);

/// Descriptors in `path` (a single file, or every *.scene.json in a
/// directory, sorted by name).
std::vector<std::filesystem::path> scene_files(const std::filesystem::path& path);

json to_json(const Posed& pose);
Posed pose_from_json(const json& j);
json to_json(const Intrinsicsd& k);
Intrinsicsd intrinsics_from_json(const json& j);
json to_json(const BBox& b);
BBox bbox_from_json(const json& j);

json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const json& j, const std::filesystem::path& path);

}  // namespace aae::cli
