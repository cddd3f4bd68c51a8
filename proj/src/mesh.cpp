#include "aae/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace aae {

namespace {

constexpr Eigen::Index kExactDiameterLimit = 5000;

}  // namespace

double point_set_diameter(const Eigen::Matrix3Xd& points) {
  Eigen::Matrix3Xd pts;
  if (points.cols() > kExactDiameterLimit) {
    pts.resize(3, kExactDiameterLimit);
    for (Eigen::Index i = 0; i < kExactDiameterLimit; ++i) {
      pts.col(i) = points.col(i * points.cols() / kExactDiameterLimit);
    }
  } else {
    pts = points;
  }
  double best = 0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const double d =
        (pts.rightCols(pts.cols() - i).colwise() - pts.col(i)).colwise().squaredNorm().maxCoeff();
    best = std::max(best, d);
  }
  return std::sqrt(best);
}

TriangleMesh::TriangleMesh(Eigen::Matrix3Xd vertices, Eigen::Matrix3Xi triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (triangles_.cols() == 0 || vertices_.cols() == 0) {
    throw Error(ErrorCode::kEmptyGeometry, "mesh has no triangles");
  }
  if (triangles_.minCoeff() < 0 || triangles_.maxCoeff() >= vertices_.cols()) {
    throw Error(ErrorCode::kBounds, "triangle index out of range");
  }
  if (!vertices_.allFinite()) {
    throw Error(ErrorCode::kDegenerate, "mesh has non-finite vertices");
  }
  diameter_ = point_set_diameter(vertices_);
  if (!(diameter_ > 0)) throw Error(ErrorCode::kEmptyGeometry, "mesh has zero extent");
}

namespace {

TriangleMesh assemble(const std::vector<Vec3d>& verts,
                      const std::vector<Eigen::Vector3i>& tris) {
  Eigen::Matrix3Xd v(3, verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) v.col(i) = verts[i];
  Eigen::Matrix3Xi t(3, tris.size());
  for (std::size_t i = 0; i < tris.size(); ++i) t.col(i) = tris[i];
  return TriangleMesh(std::move(v), std::move(t));
}

void fan(const std::vector<int>& poly, std::vector<Eigen::Vector3i>& tris) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    tris.emplace_back(poly[0], poly[i], poly[i + 1]);
  }
}

}  // namespace

TriangleMesh parse_obj(std::istream& in) {
  std::vector<Vec3d> verts;
  std::vector<Eigen::Vector3i> tris;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3d p;
      if (!(ss >> p.x() >> p.y() >> p.z())) throw ParseError("malformed vertex", lineno);
      verts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/t", "i//n", "i/t/n": only the position index matters.
        int idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoi(tok.substr(0, tok.find('/')), &used);
        } catch (const std::exception&) {
          throw ParseError("malformed face index '" + tok + "'", lineno);
        }
        const int n = static_cast<int>(verts.size());
        const int zero_based = idx > 0 ? idx - 1 : n + idx;
        if (idx == 0 || zero_based < 0 || zero_based >= n) {
          throw ParseError("face index " + tok + " out of range (" +
                               std::to_string(n) + " vertices)",
                           lineno);
        }
        poly.push_back(zero_based);
      }
      if (poly.size() < 3) throw ParseError("face with fewer than 3 vertices", lineno);
      fan(poly, tris);
    }
    // vt, vn, o, g, s, usemtl, mtllib: ignored.
  }
  if (tris.empty()) throw Error(ErrorCode::kEmptyGeometry, "OBJ contains no faces");
  return assemble(verts, tris);
}

TriangleMesh parse_ply(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != "ply") throw ParseError("missing 'ply' header", lineno + 1);
  std::size_t n_verts = 0, n_faces = 0;
  int vertex_props = 0;
  std::string current;
  bool ascii = false;
  while (true) {
    if (!next()) throw ParseError("unterminated header", lineno);
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw ParseError("only ASCII PLY is supported", lineno);
      ascii = true;
    } else if (tag == "element") {
      std::size_t count = 0;
      ss >> current >> count;
      if (current == "vertex") n_verts = count;
      if (current == "face") n_faces = count;
    } else if (tag == "property" && current == "vertex") {
      ++vertex_props;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError("missing format line", lineno);
  if (vertex_props < 3) throw ParseError("vertex element needs x y z", lineno);
  std::vector<Vec3d> verts;
  verts.reserve(n_verts);
  for (std::size_t i = 0; i < n_verts; ++i) {
    if (!next()) throw ParseError("unexpected end of vertex list", lineno + 1);
    std::istringstream ss(line);
    Vec3d p;
    if (!(ss >> p.x() >> p.y() >> p.z())) throw ParseError("malformed vertex", lineno);
    verts.push_back(p);
  }
  std::vector<Eigen::Vector3i> tris;
  for (std::size_t i = 0; i < n_faces; ++i) {
    if (!next()) throw ParseError("unexpected end of face list", lineno + 1);
    std::istringstream ss(line);
    int count = 0;
    if (!(ss >> count) || count < 3) throw ParseError("malformed face", lineno);
    std::vector<int> poly(count);
    for (auto& v : poly) {
      if (!(ss >> v)) throw ParseError("malformed face", lineno);
      if (v < 0 || v >= static_cast<int>(verts.size())) {
        throw ParseError("face index " + std::to_string(v) + " out of range", lineno);
      }
    }
    fan(poly, tris);
  }
  if (tris.empty()) throw Error(ErrorCode::kEmptyGeometry, "PLY contains no faces");
  return assemble(verts, tris);
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".ply") return parse_ply(in);
  return parse_obj(in);
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.precision(17);
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    const auto v = mesh.vertices().col(i);
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (Eigen::Index i = 0; i < mesh.triangle_count(); ++i) {
    const auto t = mesh.triangles().col(i);
    out << "f " << t.x() + 1 << ' ' << t.y() + 1 << ' ' << t.z() + 1 << '\n';
  }
}

TriangleMesh make_box(double sx, double sy, double sz) {
  std::vector<Vec3d> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1 ? 0.5 : -0.5) * sx, (i & 2 ? 0.5 : -0.5) * sy,
                   (i & 4 ? 0.5 : -0.5) * sz);
  }
  // Outward-facing quads, split into two triangles each.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  std::vector<Eigen::Vector3i> t;
  for (const auto& q : quads) fan({q[0], q[1], q[2], q[3]}, t);
  return assemble(v, t);
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw Error(ErrorCode::kBounds, "cylinder needs >= 3 segments");
  std::vector<Vec3d> v;
  std::vector<Eigen::Vector3i> t;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    v.emplace_back(radius * std::cos(a), radius * std::sin(a), -height / 2);
    v.emplace_back(radius * std::cos(a), radius * std::sin(a), height / 2);
  }
  const int bottom = static_cast<int>(v.size());
  v.emplace_back(0, 0, -height / 2);
  v.emplace_back(0, 0, height / 2);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    t.emplace_back(2 * i, 2 * j, 2 * j + 1);
    t.emplace_back(2 * i, 2 * j + 1, 2 * i + 1);
    t.emplace_back(bottom, 2 * j, 2 * i);
    t.emplace_back(bottom + 1, 2 * i + 1, 2 * j + 1);
  }
  return assemble(v, t);
}

TriangleMesh merge(const std::vector<TriangleMesh>& parts,
                   const std::vector<Vec3d>& offsets) {
  std::vector<Vec3d> v;
  std::vector<Eigen::Vector3i> t;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const int base = static_cast<int>(v.size());
    const Vec3d off = p < offsets.size() ? offsets[p] : Vec3d::Zero();
    for (Eigen::Index i = 0; i < parts[p].vertex_count(); ++i) {
      v.push_back(parts[p].vertices().col(i) + off);
    }
    for (Eigen::Index i = 0; i < parts[p].triangle_count(); ++i) {
      t.push_back(parts[p].triangles().col(i).array() + base);
    }
  }
  return assemble(v, t);
}

Eigen::Matrix3Xd sample_surface(const TriangleMesh& mesh, int n, Rng& rng) {
  const auto& v = mesh.vertices();
  const auto& tri = mesh.triangles();
  std::vector<double> cdf(tri.cols());
  double total = 0;
  for (Eigen::Index i = 0; i < tri.cols(); ++i) {
    const Vec3d a = v.col(tri(0, i)), b = v.col(tri(1, i)), c = v.col(tri(2, i));
    total += 0.5 * (b - a).cross(c - a).norm();
    cdf[i] = total;
  }
  if (!(total > 0)) throw Error(ErrorCode::kEmptyGeometry, "mesh has zero area");
  Eigen::Matrix3Xd out(3, n);
  for (int k = 0; k < n; ++k) {
    const double pick = rng.uniform() * total;
    const auto i = std::min<std::ptrdiff_t>(
        std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin(),
        static_cast<std::ptrdiff_t>(cdf.size()) - 1);
    double r1 = rng.uniform(), r2 = rng.uniform();
    if (r1 + r2 > 1) {
      r1 = 1 - r1;
      r2 = 1 - r2;
    }
    const Vec3d a = v.col(tri(0, i)), b = v.col(tri(1, i)), c = v.col(tri(2, i));
    out.col(k) = a + r1 * (b - a) + r2 * (c - a);
  }
  return out;
}

}  // namespace aae
