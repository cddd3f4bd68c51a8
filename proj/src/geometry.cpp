#include "aae/geometry.hpp"

#include <array>
#include <cmath>
#include <map>
#include <tuple>

namespace aae {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBounds: return "bounds";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kBehindCamera: return "behind-camera";
    case ErrorCode::kIntrinsics: return "intrinsics";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kUnsupportedVersion: return "unsupported-version";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kEmptyGeometry: return "empty-geometry";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kNoOverlap: return "no-overlap";
    case ErrorCode::kInsufficientOverlap: return "insufficient-overlap";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kTrainingFailure: return "training-failure";
  }
  return "unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoOverlap:
    case ErrorCode::kInsufficientOverlap:
    case ErrorCode::kDegenerateGeometry:
    case ErrorCode::kTrainingFailure:
      return true;
    default:
      return false;
  }
}

namespace {

using VertexKey = std::tuple<long long, long long, long long>;

VertexKey quantize(const Vec3d& v) {
  constexpr double kGrid = 1e9;
  return {std::llround(v.x() * kGrid), std::llround(v.y() * kGrid),
          std::llround(v.z() * kGrid)};
}

}  // namespace

ViewSphere subdivide_icosahedron(int level) {
  if (level < 0 || level > kMaxSubdivisionLevel) {
    throw Error(ErrorCode::kBounds, "subdivision level must be in [0, " +
                                        std::to_string(kMaxSubdivisionLevel) +
                                        "]");
  }
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  std::map<VertexKey, int> index;
  for (int i = 0; i < static_cast<int>(verts.size()); ++i) {
    index.emplace(quantize(verts[i]), i);
  }
  auto midpoint = [&](int a, int b) {
    const Vec3d m = (verts[a] + verts[b]).normalized();
    auto [it, inserted] =
        index.emplace(quantize(m), static_cast<int>(verts.size()));
    if (inserted) verts.push_back(m);
    return it->second;
  };

  for (int l = 0; l < level; ++l) {
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = midpoint(f[0], f[1]);
      const int bc = midpoint(f[1], f[2]);
      const int ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return ViewSphere{level, std::move(verts)};
}

Rotation3d viewpoint_to_rotation(const Vec3d& viewpoint, const Vec3d& up_hint) {
  const Vec3d z = -viewpoint.normalized();
  auto parallel = [&](const Vec3d& u) {
    return std::abs(z.dot(u.normalized())) > 1.0 - 1e-9;
  };
  Vec3d up = up_hint;
  if (parallel(up)) up = Vec3d::UnitX();
  if (parallel(up)) up = Vec3d::UnitZ();
  const Vec3d y = (up - up.dot(z) * z).normalized();
  const Vec3d x = y.cross(z);
  Mat3d m;
  m.row(0) = x.transpose();
  m.row(1) = y.transpose();
  m.row(2) = z.transpose();
  return Rotation3d::Orthonormalized(m);
}

std::vector<Rotation3d> inplane_rotations(int n) {
  if (n < 1) throw Error(ErrorCode::kBounds, "in-plane count must be >= 1");
  std::vector<Rotation3d> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    out.push_back(k == 0 ? Rotation3d::Identity()
                         : Rotation3d::AboutZ(2.0 * std::numbers::pi * k / n));
  }
  return out;
}

}  // namespace aae
