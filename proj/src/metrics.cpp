#include "aae/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "aae/kdtree.hpp"
#include "aae/render.hpp"

namespace aae {

void VsdParams::validate() const {
  if (!(tau > 0)) throw Error(ErrorCode::kConfig, "vsd tau must be positive");
  if (!(delta >= 0)) throw Error(ErrorCode::kConfig, "vsd delta must be non-negative");
  if (!(threshold > 0 && threshold <= 1)) {
    throw Error(ErrorCode::kConfig, "vsd threshold must be in (0, 1]");
  }
  if (!(min_visibility >= 0 && min_visibility <= 1)) {
    throw Error(ErrorCode::kConfig, "min_visibility must be in [0, 1]");
  }
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> visibility_mask(
    const DepthImage& rendered, const DepthImage& scene, double delta) {
  const auto surface = rendered > 0;
  const auto unoccluded = (scene <= 0) || (rendered.cast<double>() <= scene.cast<double>() + delta);
  return surface && unoccluded;
}

VsdResult vsd_from_renders(const DepthImage& est, const DepthImage& gt,
                           const DepthImage& scene, const VsdParams& params) {
  params.validate();
  if (est.rows() != scene.rows() || est.cols() != scene.cols() ||
      gt.rows() != scene.rows() || gt.cols() != scene.cols()) {
    throw Error(ErrorCode::kDimension, "depth maps differ in size");
  }
  const auto gt_silhouette = (gt > 0).count();
  if (gt_silhouette == 0) {
    throw Error(ErrorCode::kDegenerate, "ground-truth pose renders no pixels");
  }
  const auto vis_est = visibility_mask(est, scene, params.delta);
  const auto vis_gt = visibility_mask(gt, scene, params.delta);
  const auto both = vis_est && vis_gt;
  const auto matched =
      both && ((est.cast<double>() - gt.cast<double>()).abs() < params.tau);
  const auto union_count = (vis_est || vis_gt).count();

  VsdResult out;
  out.visibility = static_cast<double>(vis_gt.count()) / static_cast<double>(gt_silhouette);
  out.error = union_count == 0
                  ? 1.0
                  : 1.0 - static_cast<double>(matched.count()) / static_cast<double>(union_count);
  return out;
}

VsdResult vsd_error(const TriangleMesh& mesh, const Posed& est, const Posed& gt,
                    const DepthImage& scene_depth, const Intrinsicsd& k,
                    const VsdParams& params) {
  if (scene_depth.rows() != k.height() || scene_depth.cols() != k.width()) {
    throw Error(ErrorCode::kDimension, "scene depth does not match the intrinsics");
  }
  return vsd_from_renders(render_depth(mesh, est, k), render_depth(mesh, gt, k),
                          scene_depth, params);
}

namespace {
Eigen::Matrix3Xd transform(const Eigen::Matrix3Xd& pts, const Posed& p) {
  return (p.rotation.matrix() * pts).colwise() + p.translation;
}
}  // namespace

double add_error(const Eigen::Matrix3Xd& points, const Posed& est, const Posed& gt) {
  if (points.cols() == 0) throw Error(ErrorCode::kEmptyGeometry, "no model points");
  return (transform(points, est) - transform(points, gt)).colwise().norm().mean();
}

double adi_error(const Eigen::Matrix3Xd& points, const Posed& est, const Posed& gt) {
  if (points.cols() == 0) throw Error(ErrorCode::kEmptyGeometry, "no model points");
  const KdTree tree(transform(points, est));
  const Eigen::Matrix3Xd g = transform(points, gt);
  double sum = 0;
  for (Eigen::Index i = 0; i < g.cols(); ++i) {
    sum += std::sqrt(tree.nearest(g.col(i)).squared_distance);
  }
  return sum / static_cast<double>(g.cols());
}

double add_error(const TriangleMesh& mesh, const Posed& est, const Posed& gt) {
  return add_error(mesh.vertices(), est, gt);
}

double adi_error(const TriangleMesh& mesh, const Posed& est, const Posed& gt) {
  return adi_error(mesh.vertices(), est, gt);
}

bool add_correct(double err_add, double diameter, double k_m) {
  if (!(diameter > 0)) throw Error(ErrorCode::kDegenerate, "diameter must be positive");
  return err_add < k_m * diameter;
}

std::vector<EvalRecord> filter_visible(const std::vector<EvalRecord>& records,
                                       double min_visibility) {
  std::vector<EvalRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const EvalRecord& r) { return r.visibility > min_visibility; });
  return out;
}

double recall_at(const std::vector<EvalRecord>& records, double threshold) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to aggregate");
  const auto hits = std::count_if(records.begin(), records.end(), [&](const EvalRecord& r) {
    return r.err_vsd && *r.err_vsd < threshold;
  });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double auc_vsd(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to aggregate");
  // recall(e) steps up by 1/n at each err_i, so its integral over [0, 1] is
  // the mean of (1 - err_i).
  double area = 0;
  for (const auto& r : records) {
    const double e = r.err_vsd ? std::clamp(*r.err_vsd, 0.0, 1.0) : 1.0;
    area += 1.0 - e;
  }
  return area / static_cast<double>(records.size());
}

}  // namespace aae
