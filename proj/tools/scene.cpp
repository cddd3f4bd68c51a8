#include "scene.hpp"

#include <algorithm>
#include <fstream>

#include "aae/error.hpp"

namespace aae::cli {

namespace fs = std::filesystem;

namespace {

std::vector<double> numbers(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw Error(ErrorCode::kParse, std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::kParse, std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
  const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  if (!fs::exists(p)) throw Error(ErrorCode::kIo, "referenced file not found: " + p.string());
  return p;
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  return fs::relative(target, base).generic_string();
}

}  // namespace

json to_json(const Posed& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r.push_back(pose.rotation(i, j));
  }
  return {{"rotation", r},
          {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

Posed pose_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rotation") || !j.contains("translation")) {
    throw Error(ErrorCode::kParse, "pose needs rotation and translation");
  }
  const auto r = numbers(j["rotation"], 9, "rotation");
  const auto t = numbers(j["translation"], 3, "translation");
  Mat3d m;
  m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  return Posed(Rotation3d::FromMatrix(m, 1e-6), Vec3d(t[0], t[1], t[2]));
}

json to_json(const Intrinsicsd& k) {
  return {{"fx", k.fx()}, {"fy", k.fy()},         {"cx", k.cx()},
          {"cy", k.cy()}, {"width", k.width()}, {"height", k.height()}};
}

Intrinsicsd intrinsics_from_json(const json& j) {
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw Error(ErrorCode::kParse, std::string("intrinsics field '") + key + "' missing");
    }
  }
  return Intrinsicsd(j["fx"].get<double>(), j["fy"].get<double>(), j["cx"].get<double>(),
                     j["cy"].get<double>(), j["width"].get<int>(), j["height"].get<int>());
}

json to_json(const BBox& b) { return {b.x, b.y, b.w, b.h}; }

BBox bbox_from_json(const json& j) {
  const auto v = numbers(j, 4, "bbox");
  if (!(v[2] > 0 && v[3] > 0)) throw Error(ErrorCode::kParse, "bbox width and height must be positive");
  return {v[0], v[1], v[2], v[3]};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

SceneDescriptor load_scene(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = path.parent_path();
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::kUnsupportedVersion, "unsupported scene schema version");
    }
    SceneDescriptor s;
    s.path = path;
    s.mesh = resolve(base, j.at("mesh").get<std::string>());
    s.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    s.image = resolve(base, j.at("image").get<std::string>());
    if (j.contains("depth") && !j["depth"].is_null()) {
      s.depth = resolve(base, j["depth"].get<std::string>());
    }
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      if (o.contains("id")) obj.id = o["id"].get<std::string>();
      obj.gt_pose = pose_from_json(o.at("gt_pose"));
      if (o.contains("bbox") && !o["bbox"].is_null()) obj.bbox = bbox_from_json(o["bbox"]);
      s.objects.push_back(obj);
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void save_scene(const SceneDescriptor& s, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  json objects = json::array();
  for (const auto& o : s.objects) {
    json jo = {{"id", o.id}, {"gt_pose", to_json(o.gt_pose)}};
    if (o.bbox) jo["bbox"] = to_json(*o.bbox);
    objects.push_back(jo);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"mesh", relative_to(s.mesh, base)},
            {"intrinsics", to_json(s.intrinsics)},
            {"image", relative_to(s.image, base)},
            {"objects", objects}};
  if (s.depth) j["depth"] = relative_to(*s.depth, base);
  write_json(j, path);
}

std::vector<fs::path> scene_files(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, "no such scene path: " + path.string());
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(path)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 11 && name.ends_with(".scene.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace aae::cli
