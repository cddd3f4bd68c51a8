#include "aae/icp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "aae/kdtree.hpp"
#include "aae/render.hpp"

namespace aae {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct Correspondences {
  Eigen::Matrix3Xd model;   // camera-frame model points
  Eigen::Matrix3Xd scene;
  Eigen::Matrix3Xd normals;
  std::vector<double> residuals;  // signed point-to-plane

  int size() const { return static_cast<int>(residuals.size()); }
  double median_abs() const {
    std::vector<double> a(residuals.size());
    std::transform(residuals.begin(), residuals.end(), a.begin(),
                   [](double r) { return std::abs(r); });
    return median(std::move(a));
  }
};

class Matcher {
 public:
  Matcher(const Eigen::Matrix3Xd& model, const PointCloud& scene)
      : model_(model), scene_(scene), tree_(scene.points) {}

  Eigen::Matrix3Xd to_camera(const Posed& pose) const {
    return (pose.rotation.matrix() * model_).colwise() + pose.translation;
  }

  Correspondences match(const Posed& pose, double threshold) const {
    const Eigen::Matrix3Xd cam = to_camera(pose);
    std::vector<Eigen::Index> src, dst;
    const double gate = threshold * threshold;
    for (Eigen::Index i = 0; i < cam.cols(); ++i) {
      const auto hit = tree_.nearest(cam.col(i));
      if (hit.index >= 0 && hit.squared_distance <= gate) {
        src.push_back(i);
        dst.push_back(hit.index);
      }
    }
    Correspondences c;
    const auto n = static_cast<Eigen::Index>(src.size());
    c.model.resize(3, n);
    c.scene.resize(3, n);
    c.normals.resize(3, n);
    c.residuals.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      c.model.col(j) = cam.col(src[j]);
      c.scene.col(j) = scene_.points.col(dst[j]);
      c.normals.col(j) = scene_.normals.col(dst[j]);
      c.residuals[j] = c.normals.col(j).dot(c.model.col(j) - c.scene.col(j));
    }
    return c;
  }

  double median_nn_distance(const Posed& pose) const {
    const Eigen::Matrix3Xd cam = to_camera(pose);
    std::vector<double> d(cam.cols());
    for (Eigen::Index i = 0; i < cam.cols(); ++i) {
      d[i] = std::sqrt(tree_.nearest(cam.col(i)).squared_distance);
    }
    return median(std::move(d));
  }

  const Eigen::Matrix3Xd& model() const { return model_; }

 private:
  const Eigen::Matrix3Xd& model_;
  const PointCloud& scene_;
  KdTree tree_;
};

struct Gate {
  double initial;
  double floor;
};

Gate make_gate(const Matcher& m, const PointCloud& scene, const Posed& init,
               const IcpConfig& cfg) {
  const double floor = cfg.min_threshold
                           ? *cfg.min_threshold
                           : std::max(cfg.convergence_eps, 3.0 * median_spacing(scene.points));
  const double initial = cfg.initial_threshold
                             ? *cfg.initial_threshold
                             : std::max(floor, 3.0 * m.median_nn_distance(init));
  return {initial, floor};
}

void check_inputs(const Eigen::Matrix3Xd& model, const PointCloud& scene, const Posed& init) {
  if (model.cols() == 0) throw Error(ErrorCode::kEmptyInput, "model cloud is empty");
  if (scene.size() == 0) throw Error(ErrorCode::kNoOverlap, "scene cloud is empty");
  if (!scene.has_normals()) {
    throw Error(ErrorCode::kInsufficientData, "scene cloud needs normals");
  }
  if (!(init.translation.z() > 0)) {
    throw Error(ErrorCode::kBehindCamera, "initial pose is not in front of the camera");
  }
}

// Left-multiplied increment: x -> R(omega) x + v.
Posed apply_twist(const Posed& pose, const Eigen::Matrix<double, 6, 1>& xi) {
  const Rotation3d dr = Rotation3d::Exp(xi.head<3>());
  const Rotation3d r = Rotation3d::Orthonormalized((dr * pose.rotation).matrix());
  return Posed(r, dr * pose.translation + xi.tail<3>());
}

double rms_motion(const Eigen::Matrix3Xd& cam, const Eigen::Matrix<double, 6, 1>& xi) {
  const Rotation3d dr = Rotation3d::Exp(xi.head<3>());
  const Eigen::Matrix3Xd moved = (dr.matrix() * cam).colwise() + Vec3d(xi.tail<3>());
  return std::sqrt((moved - cam).colwise().squaredNorm().mean());
}

}  // namespace

void IcpConfig::validate() const {
  if (max_iterations <= 0 || threshold_decay <= 0 || threshold_decay > 1 ||
      min_correspondences <= 0 || !(convergence_eps > 0) ||
      (initial_threshold && !(*initial_threshold > 0)) ||
      (min_threshold && !(*min_threshold > 0))) {
    throw Error(ErrorCode::kConfig, "invalid ICP configuration");
  }
}

PointCloud backproject(const DepthImage& depth, const Intrinsicsd& k) {
  const auto n = (depth > 0).count();
  PointCloud pc;
  pc.points.resize(3, n);
  Eigen::Index j = 0;
  for (Eigen::Index r = 0; r < depth.rows(); ++r) {
    for (Eigen::Index c = 0; c < depth.cols(); ++c) {
      const double z = depth(r, c);
      if (z > 0) pc.points.col(j++) = backproject(k, Vec2d(c + 0.5, r + 0.5), z);
    }
  }
  return pc;
}

double median_spacing(const Eigen::Matrix3Xd& points) {
  if (points.cols() < 2) return 0;
  const KdTree tree(points);
  std::vector<double> d(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const auto hits = tree.knn(points.col(i), 2);
    d[i] = std::sqrt(hits.back().squared_distance);
  }
  return median(std::move(d));
}

PointCloud estimate_normals(const PointCloud& cloud, int k_neighbors, Eigen::Index* dropped) {
  if (k_neighbors < 3 || cloud.size() < k_neighbors) {
    throw Error(ErrorCode::kInsufficientData,
                "normal estimation needs at least " + std::to_string(std::max(k_neighbors, 3)) +
                    " points");
  }
  const KdTree tree(cloud.points);
  std::vector<Eigen::Index> keep;
  std::vector<Vec3d> normals;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Vec3d p = cloud.points.col(i);
    const auto hits = tree.knn(p, k_neighbors);
    Vec3d mean = Vec3d::Zero();
    for (const auto& h : hits) mean += cloud.points.col(h.index);
    mean /= static_cast<double>(hits.size());
    Mat3d cov = Mat3d::Zero();
    for (const auto& h : hits) {
      const Vec3d d = cloud.points.col(h.index) - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3d> es(cov);
    const Vec3d ev = es.eigenvalues();  // ascending
    // A plane needs two non-vanishing spreads.
    if (!(ev(2) > 0) || ev(1) <= 1e-10 * ev(2)) continue;
    Vec3d n = es.eigenvectors().col(0).normalized();
    if (n.dot(p) > 0) n = -n;
    keep.push_back(i);
    normals.push_back(n);
  }
  PointCloud out;
  out.points.resize(3, static_cast<Eigen::Index>(keep.size()));
  out.normals.resize(3, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.points.col(j) = cloud.points.col(keep[j]);
    out.normals.col(j) = normals[j];
  }
  if (dropped) *dropped = cloud.size() - static_cast<Eigen::Index>(keep.size());
  return out;
}

Eigen::Matrix3Xd sample_visible_points(const TriangleMesh& mesh, const Posed& pose,
                                       const Intrinsicsd& k, int n_samples, Rng& rng) {
  const DepthImage depth = render_depth(mesh, pose, k);
  const Eigen::Matrix3Xd obj = sample_surface(mesh, n_samples, rng);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < obj.cols(); ++i) {
    const Vec3d p = pose * Vec3d(obj.col(i));
    if (!(p.z() > kDefaultNearPlane)) continue;
    const Vec2d uv = project(k, p);
    const auto c = static_cast<Eigen::Index>(std::floor(uv.x()));
    const auto r = static_cast<Eigen::Index>(std::floor(uv.y()));
    if (c < 0 || r < 0 || c >= depth.cols() || r >= depth.rows()) continue;
    const double z = depth(r, c);
    if (z > 0 && p.z() <= z + 1.0) keep.push_back(i);
  }
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(j) = obj.col(keep[j]);
  return out;
}

Posed icp_refine_z(const Eigen::Matrix3Xd& model, const PointCloud& scene,
                   const Posed& init, const IcpConfig& cfg) {
  cfg.validate();
  check_inputs(model, scene, init);
  const Matcher m(model, scene);
  const Gate gate = make_gate(m, scene, init, cfg);
  const Vec3d ray = init.translation.normalized();

  Posed pose = init;
  double threshold = gate.initial;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Correspondences c = m.match(pose, threshold);
    // Offset along the ray that puts each model point on its scene plane;
    // planes nearly parallel to the ray carry no information.
    std::vector<double> offsets;
    for (int j = 0; j < c.size(); ++j) {
      const double along = c.normals.col(j).dot(ray);
      if (std::abs(along) >= 0.2) offsets.push_back(-c.residuals[j] / along);
    }
    if (offsets.empty()) {
      if (it == 0) throw IterationError(ErrorCode::kNoOverlap, "no correspondences along the ray", it);
      break;
    }
    const double step = median(std::move(offsets));
    if (std::abs(step) < cfg.convergence_eps) break;
    pose = Posed(pose.rotation, pose.translation + step * ray);
    threshold = std::max(threshold * cfg.threshold_decay, gate.floor);
  }
  return pose;
}

IcpResult icp_refine(const Eigen::Matrix3Xd& model, const PointCloud& scene,
                     const Posed& init, const IcpConfig& cfg) {
  cfg.validate();
  check_inputs(model, scene, init);
  const Matcher m(model, scene);
  const Gate gate = make_gate(m, scene, init, cfg);

  IcpResult out{init, {}};
  double threshold = gate.initial;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Correspondences c = m.match(out.pose, threshold);
    if (c.size() < cfg.min_correspondences) {
      throw IterationError(ErrorCode::kInsufficientOverlap,
                           std::to_string(c.size()) + " correspondences within " +
                               std::to_string(threshold) + " mm",
                           it);
    }
    out.stats.correspondences = c.size();
    out.stats.final_residual = c.median_abs();
    out.stats.final_threshold = threshold;

    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    for (int j = 0; j < c.size(); ++j) {
      Eigen::Matrix<double, 6, 1> jac;
      jac << Vec3d(c.model.col(j)).cross(Vec3d(c.normals.col(j))), c.normals.col(j);
      a.noalias() += jac * jac.transpose();
      b.noalias() += jac * c.residuals[j];
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(a);
    const auto& ev = es.eigenvalues();
    if (!(ev(5) > 0) || ev(0) <= 1e-12 * ev(5)) {
      throw IterationError(ErrorCode::kDegenerateGeometry,
                           "point-to-plane normal equations are singular", it);
    }
    Eigen::Matrix<double, 6, 1> xi = -a.ldlt().solve(b);

    const Eigen::Matrix3Xd cam = m.to_camera(out.pose);
    if (rms_motion(cam, xi) < cfg.convergence_eps) break;

    const double before = c.median_abs();
    bool accepted = false;
    for (int halving = 0; halving < 5 && !accepted; ++halving, xi *= 0.5) {
      const Posed candidate = apply_twist(out.pose, xi);
      const Correspondences cc = m.match(candidate, threshold);
      if (cc.size() < cfg.min_correspondences) continue;
      const double after = cc.median_abs();
      if (after <= before) {
        out.pose = candidate;
        out.stats.final_residual = after;
        out.stats.correspondences = cc.size();
        out.stats.residual_history.push_back(after);
        accepted = true;
      }
    }
    out.stats.iterations = it + 1;
    if (!accepted) break;
    threshold = std::max(threshold * cfg.threshold_decay, gate.floor);
  }
  return out;
}

}  // namespace aae
