#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "aae/geometry.hpp"
#include "aae/image.hpp"
#include "aae/mesh.hpp"

namespace aae {

constexpr double kDefaultNearPlane = 10.0;  // mm

/// Z-buffer depth rendering of `mesh` placed by `pose`. A pixel is covered
/// when its centre lies inside a projected triangle; shared edges go to
/// exactly one triangle. Depth is interpolated perspective-correctly and
/// geometry in front of the near plane is clipped. No face culling.
DepthImage render_depth(const TriangleMesh& mesh, const Posed& pose,
                        const Intrinsicsd& k, double near = kDefaultNearPlane);

/// Tight box around pixels with depth > 0, or nothing for an empty image.
std::optional<BBox> silhouette_bbox(const DepthImage& depth);

struct RenderedView {
  DepthImage depth;
  Rotation3d rotation;
  /// Empty when the view produced no pixels.
  std::optional<BBox> bbox;
};

/// Rotation of codebook view (viewpoint, in-plane step): the in-plane turn
/// applied after looking along the viewpoint.
Rotation3d codebook_rotation(const Vec3d& viewpoint, const Rotation3d& inplane);

/// Visits |sphere| * n_inplane views, viewpoint-major, with the object at
/// (0, 0, t_syn_z). `visit(index, view)` is called in order.
void for_each_codebook_view(
    const TriangleMesh& mesh, const ViewSphere& sphere, int n_inplane,
    const Intrinsicsd& k_syn, double t_syn_z,
    const std::function<void(std::size_t, const RenderedView&)>& visit);

/// Materialized form of for_each_codebook_view; fine for small spheres.
std::vector<RenderedView> generate_codebook_views(const TriangleMesh& mesh,
                                                  const ViewSphere& sphere,
                                                  int n_inplane,
                                                  const Intrinsicsd& k_syn,
                                                  double t_syn_z);

}  // namespace aae
