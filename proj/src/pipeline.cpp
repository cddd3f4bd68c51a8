#include "aae/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace aae {

BBox crop_window(const BBox& bbox, double padding) {
  if (!(bbox.w > 0) || !(bbox.h > 0) || !std::isfinite(bbox.x) ||
      !std::isfinite(bbox.y) || !std::isfinite(bbox.w) || !std::isfinite(bbox.h)) {
    throw Error(ErrorCode::kBounds, "degenerate bounding box");
  }
  if (!(padding >= 1.0) || !std::isfinite(padding)) {
    throw Error(ErrorCode::kBounds, "crop padding must be >= 1");
  }
  const double side = std::max(bbox.w, bbox.h) * padding;
  return {bbox.center_x() - side / 2, bbox.center_y() - side / 2, side, side};
}

ImageF square_crop(const ImageF& image, const BBox& bbox, double padding, int out_size) {
  if (out_size <= 0) throw Error(ErrorCode::kBounds, "crop size must be positive");
  const BBox win = crop_window(bbox, padding);
  const double step = win.w / out_size;
  ImageF out = ImageF::Zero(out_size, out_size);
  const auto rows = image.rows(), cols = image.cols();
  for (int i = 0; i < out_size; ++i) {
    const auto r = static_cast<Eigen::Index>(std::floor(win.y + (i + 0.5) * step));
    if (r < 0 || r >= rows) continue;
    for (int j = 0; j < out_size; ++j) {
      const auto c = static_cast<Eigen::Index>(std::floor(win.x + (j + 0.5) * step));
      if (c >= 0 && c < cols) out(i, j) = image(r, c);
    }
  }
  return out;
}

double estimate_distance(const DistanceContext& ctx, double bb_real_diag,
                         double bb_syn_diag) {
  if (!(bb_real_diag > 0) || !(bb_syn_diag > 0)) {
    throw Error(ErrorCode::kDegenerate, "bounding box diagonal must be positive");
  }
  return ctx.t_syn_z * (bb_syn_diag / bb_real_diag) *
         (ctx.k_real.focal() / ctx.k_syn.focal());
}

Vec3d estimate_translation(const DistanceContext& ctx, double t_real_z,
                           const Vec2d& bb_real_center, const Vec2d& bb_syn_center) {
  if (!(t_real_z > 0)) throw Error(ErrorCode::kBehindCamera, "distance must be positive");
  const Mat3d k_real_inv = ctx.k_real.inverse_matrix();
  const Mat3d k_syn_inv = ctx.k_syn.inverse_matrix();
  if (!k_real_inv.allFinite() || !k_syn_inv.allFinite()) {
    throw Error(ErrorCode::kIntrinsics, "camera matrix is singular");
  }
  const Vec3d delta = t_real_z * (k_real_inv * bb_real_center.homogeneous()) -
                      ctx.t_syn_z * (k_syn_inv * bb_syn_center.homogeneous());
  return Vec3d(0, 0, ctx.t_syn_z) + delta;
}

CorrectionAngles perspective_angles(const Vec3d& t) {
  if (!(t.z() > 0)) throw Error(ErrorCode::kBehindCamera, "translation has non-positive depth");
  return {-std::atan(t.y() / t.z()),
          std::atan(t.x() / std::sqrt(t.z() * t.z() + t.y() * t.y()))};
}

Rotation3d perspective_correction(const Rotation3d& centered, const Vec3d& t_real) {
  const auto a = perspective_angles(t_real);
  if (a.about_x == 0 && a.about_y == 0) return centered;
  return Rotation3d::AboutY(a.about_y) * Rotation3d::AboutX(a.about_x) * centered;
}

PoseEstimate estimate_pose(const ImageF& image, const Detection& det,
                           const ImageEncoder& encode, const Codebook& cb,
                           const DistanceContext& ctx, const PipelineConfig& cfg) {
  if (cb.empty()) throw Error(ErrorCode::kBounds, "codebook is empty");
  const ImageF crop = square_crop(image, det.bbox, cfg.padding, cfg.crop_size);
  const LatentCode code = encode(crop);
  const int k = std::clamp(cfg.k, 1, static_cast<int>(cb.size()));

  PoseEstimate out;
  out.neighbors = knn_query(cb, code, k);
  const auto& best = cb.entry(out.neighbors.front().index);
  out.similarity = out.neighbors.front().similarity;
  out.centered_rotation = best.orientation();

  const double t_z = estimate_distance(ctx, det.bbox.diagonal(), best.bbox_diag);
  const Vec3d t = estimate_translation(
      ctx, t_z, {det.bbox.center_x(), det.bbox.center_y()},
      best.bbox_center.cast<double>());
  const Rotation3d r = cfg.correct_perspective
                           ? perspective_correction(out.centered_rotation, t)
                           : out.centered_rotation;
  out.pose = Posed(r, t);
  return out;
}

ViewEncoder crop_then_encode(ImageEncoder encode, double padding, int crop_size) {
  return [encode = std::move(encode), padding, crop_size](const CodebookView& v) {
    return encode(square_crop(v.image, v.bbox, padding, crop_size));
  };
}

LatentCode flatten_encoder(const ImageF& crop) {
  return Eigen::Map<const LatentCode>(crop.data(), crop.size());
}

LatentCode DepthCropEncoder::operator()(const ImageF& crop) const {
  float nearest = 0;
  for (Eigen::Index i = 0; i < crop.size(); ++i) {
    const float d = crop.data()[i];
    if (d > 0 && (nearest == 0 || d < nearest)) nearest = d;
  }
  LatentCode code = LatentCode::Zero(crop.size());
  if (nearest == 0) return code;
  for (Eigen::Index i = 0; i < crop.size(); ++i) {
    const float d = crop.data()[i];
    if (d > 0) {
      code(i) = static_cast<float>(
          std::max(0.05, 1.0 - 0.5 * (d - nearest) / depth_scale));
    }
  }
  return code;
}

}  // namespace aae
