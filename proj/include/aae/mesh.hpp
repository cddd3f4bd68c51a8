#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>

#include "aae/geometry.hpp"
#include "aae/rng.hpp"

namespace aae {

/// Triangle soup in millimetres. Column i of `vertices()` is vertex i; column
/// j of `triangles()` holds the three vertex indices of triangle j.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  /// Throws kEmptyGeometry without triangles, kBounds on bad indices.
  TriangleMesh(Eigen::Matrix3Xd vertices, Eigen::Matrix3Xi triangles);

  const Eigen::Matrix3Xd& vertices() const { return vertices_; }
  const Eigen::Matrix3Xi& triangles() const { return triangles_; }
  Eigen::Index vertex_count() const { return vertices_.cols(); }
  Eigen::Index triangle_count() const { return triangles_.cols(); }
  /// Largest distance between two vertices.
  double diameter() const { return diameter_; }

 private:
  Eigen::Matrix3Xd vertices_;
  Eigen::Matrix3Xi triangles_;
  double diameter_ = 0;
};

/// Maximum pairwise distance. Exact up to 5000 points; above that, exact over
/// an evenly strided 5000-point subset.
double point_set_diameter(const Eigen::Matrix3Xd& points);

/// ASCII OBJ (v / f records; polygons fan-triangulated, negative indices
/// allowed) or ASCII PLY (vertex x y z first, face lists), chosen by file
/// extension.
TriangleMesh load_mesh(const std::filesystem::path& path);
TriangleMesh parse_obj(std::istream& in);
TriangleMesh parse_ply(std::istream& in);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Axis-aligned box centred at the origin.
TriangleMesh make_box(double sx, double sy, double sz);
/// Closed cylinder along z centred at the origin.
TriangleMesh make_cylinder(double radius, double height, int segments);
/// Concatenation of several meshes (no vertex welding).
TriangleMesh merge(const std::vector<TriangleMesh>& parts,
                   const std::vector<Vec3d>& offsets);

/// Area-uniform surface samples in the object frame.
Eigen::Matrix3Xd sample_surface(const TriangleMesh& mesh, int n, Rng& rng);

}  // namespace aae
