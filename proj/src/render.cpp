#include "aae/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace aae {

namespace {

struct ScreenVertex {
  double x, y;  // pixel coordinates
  double inv_z;
};

// Sutherland-Hodgman against z >= near; at most 4 output vertices.
int clip_near(const std::array<Vec3d, 3>& in, double near, std::array<Vec3d, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3d& a = in[i];
    const Vec3d& b = in[(i + 1) % 3];
    const bool a_in = a.z() >= near, b_in = b.z() >= near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double s = (near - a.z()) / (b.z() - a.z());
      Vec3d p = a + s * (b - a);
      p.z() = near;
      out[n++] = p;
    }
  }
  return n;
}

// Edge ownership for pixel centres exactly on an edge; two triangles sharing
// an edge see it with opposite directions, so exactly one owns it.
bool owns_edge(double dx, double dy) { return dy > 0 || (dy == 0 && dx < 0); }

void raster_triangle(ScreenVertex a, ScreenVertex b, ScreenVertex c, DepthImage& zbuf) {
  auto edge = [](const ScreenVertex& p, const ScreenVertex& q, double x, double y) {
    return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
  };
  double area = edge(a, b, c.x, c.y);
  if (area == 0 || !std::isfinite(area)) return;
  if (area < 0) {
    std::swap(b, c);
    area = -area;
  }
  const int w = static_cast<int>(zbuf.cols()), h = static_cast<int>(zbuf.rows());
  const double min_x = std::min({a.x, b.x, c.x}), max_x = std::max({a.x, b.x, c.x});
  const double min_y = std::min({a.y, b.y, c.y}), max_y = std::max({a.y, b.y, c.y});
  // Pixel col covers centre col + 0.5.
  const int c0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
  const int c1 = std::min(w - 1, static_cast<int>(std::ceil(max_x - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int r1 = std::min(h - 1, static_cast<int>(std::ceil(max_y - 0.5)));
  if (c0 > c1 || r0 > r1) return;

  const bool own_ab = owns_edge(b.x - a.x, b.y - a.y);
  const bool own_bc = owns_edge(c.x - b.x, c.y - b.y);
  const bool own_ca = owns_edge(a.x - c.x, a.y - c.y);
  auto inside = [](double e, bool own) { return e > 0 || (e == 0 && own); };

  for (int r = r0; r <= r1; ++r) {
    const double py = r + 0.5;
    for (int col = c0; col <= c1; ++col) {
      const double px = col + 0.5;
      const double wa = edge(b, c, px, py);
      const double wb = edge(c, a, px, py);
      const double wc = edge(a, b, px, py);
      if (!inside(wa, own_bc) || !inside(wb, own_ca) || !inside(wc, own_ab)) continue;
      const double inv_z = (wa * a.inv_z + wb * b.inv_z + wc * c.inv_z) / area;
      if (!(inv_z > 0)) continue;
      const auto z = static_cast<float>(1.0 / inv_z);
      float& dst = zbuf(r, col);
      if (dst == 0 || z < dst) dst = z;
    }
  }
}

}  // namespace

DepthImage render_depth(const TriangleMesh& mesh, const Posed& pose,
                        const Intrinsicsd& k, double near) {
  DepthImage zbuf = DepthImage::Zero(k.height(), k.width());
  const Eigen::Matrix3Xd cam =
      (pose.rotation.matrix() * mesh.vertices()).colwise() + pose.translation;
  const auto& tris = mesh.triangles();
  std::array<Vec3d, 4> poly;
  for (Eigen::Index t = 0; t < tris.cols(); ++t) {
    const std::array<Vec3d, 3> tri = {cam.col(tris(0, t)), cam.col(tris(1, t)),
                                      cam.col(tris(2, t))};
    if (tri[0].z() < near && tri[1].z() < near && tri[2].z() < near) continue;
    const int n = clip_near(tri, near, poly);
    std::array<ScreenVertex, 4> sv;
    for (int i = 0; i < n; ++i) {
      const Vec3d& p = poly[i];
      sv[i] = {k.fx() * p.x() / p.z() + k.cx(), k.fy() * p.y() / p.z() + k.cy(),
               1.0 / p.z()};
    }
    for (int i = 1; i + 1 < n; ++i) raster_triangle(sv[0], sv[i], sv[i + 1], zbuf);
  }
  return zbuf;
}

std::optional<BBox> silhouette_bbox(const DepthImage& depth) {
  int r0 = std::numeric_limits<int>::max(), c0 = r0, r1 = -1, c1 = -1;
  for (Eigen::Index r = 0; r < depth.rows(); ++r) {
    for (Eigen::Index c = 0; c < depth.cols(); ++c) {
      if (depth(r, c) > 0) {
        r0 = std::min(r0, static_cast<int>(r));
        r1 = std::max(r1, static_cast<int>(r));
        c0 = std::min(c0, static_cast<int>(c));
        c1 = std::max(c1, static_cast<int>(c));
      }
    }
  }
  if (r1 < 0) return std::nullopt;
  return BBox{static_cast<double>(c0), static_cast<double>(r0),
              static_cast<double>(c1 - c0 + 1), static_cast<double>(r1 - r0 + 1)};
}

Rotation3d codebook_rotation(const Vec3d& viewpoint, const Rotation3d& inplane) {
  return inplane * viewpoint_to_rotation(viewpoint);
}

void for_each_codebook_view(
    const TriangleMesh& mesh, const ViewSphere& sphere, int n_inplane,
    const Intrinsicsd& k_syn, double t_syn_z,
    const std::function<void(std::size_t, const RenderedView&)>& visit) {
  if (sphere.viewpoints.empty()) throw Error(ErrorCode::kEmptyInput, "empty view sphere");
  const auto inplane = inplane_rotations(n_inplane);
  std::size_t index = 0;
  RenderedView view;
  for (const auto& v : sphere.viewpoints) {
    for (const auto& ip : inplane) {
      view.rotation = codebook_rotation(v, ip);
      view.depth = render_depth(mesh, Posed(view.rotation, {0, 0, t_syn_z}), k_syn);
      view.bbox = silhouette_bbox(view.depth);
      visit(index++, view);
    }
  }
}

std::vector<RenderedView> generate_codebook_views(const TriangleMesh& mesh,
                                                  const ViewSphere& sphere,
                                                  int n_inplane,
                                                  const Intrinsicsd& k_syn,
                                                  double t_syn_z) {
  std::vector<RenderedView> out;
  out.reserve(sphere.viewpoints.size() * static_cast<std::size_t>(std::max(n_inplane, 0)));
  for_each_codebook_view(mesh, sphere, n_inplane, k_syn, t_syn_z,
                         [&](std::size_t, const RenderedView& v) { out.push_back(v); });
  return out;
}

}  // namespace aae
