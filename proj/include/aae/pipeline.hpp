#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aae/codebook.hpp"
#include "aae/geometry.hpp"
#include "aae/image.hpp"

namespace aae {

/// Output contract of a 2D detector.
struct Detection {
  BBox bbox;
  std::string object_id;
  double score = 1.0;
};

struct DistanceContext {
  /// Distance at which codebook views were rendered, mm.
  double t_syn_z = 700.0;
  Intrinsicsd k_syn;
  Intrinsicsd k_real;
};

constexpr double kDefaultCropPadding = 1.2;

/// Square window centred on `bbox` with side max(w, h) * padding.
BBox crop_window(const BBox& bbox, double padding);

/// Nearest-neighbour resample of crop_window(bbox, padding) to
/// out_size x out_size. Pixels outside the source image are 0.
ImageF square_crop(const ImageF& image, const BBox& bbox, double padding, int out_size);

/// Depth from the ratio of bounding-box diagonals under the pinhole model.
double estimate_distance(const DistanceContext& ctx, double bb_real_diag,
                         double bb_syn_diag);

/// Full translation: the synthetic object centre (0, 0, t_syn_z) shifted by
/// the difference of the back-projected box centres.
Vec3d estimate_translation(const DistanceContext& ctx, double t_real_z,
                           const Vec2d& bb_real_center, const Vec2d& bb_syn_center);

struct CorrectionAngles {
  double about_x = 0;
  double about_y = 0;
};
CorrectionAngles perspective_angles(const Vec3d& t_real);

/// Rotates a rotation estimated from a centred view so that it keeps its
/// appearance at the off-centre translation t_real.
Rotation3d perspective_correction(const Rotation3d& centered, const Vec3d& t_real);

using ImageEncoder = std::function<LatentCode(const ImageF&)>;

struct PipelineConfig {
  double padding = kDefaultCropPadding;
  int crop_size = 16;
  /// Neighbours reported in diagnostics; the pose always uses the best one.
  int k = 1;
  bool correct_perspective = true;
};

struct PoseEstimate {
  Posed pose;
  /// Codebook rotation before perspective correction.
  Rotation3d centered_rotation;
  std::vector<Neighbor> neighbors;
  double similarity = 0;
};

/// Crop, encode, look up, then recover distance, translation and corrected
/// rotation. Deterministic for identical inputs.
PoseEstimate estimate_pose(const ImageF& image, const Detection& det,
                           const ImageEncoder& encode, const Codebook& cb,
                           const DistanceContext& ctx, const PipelineConfig& cfg = {});

/// Adapts an image encoder to codebook views: crops each view around its
/// silhouette box exactly as estimate_pose crops detections.
ViewEncoder crop_then_encode(ImageEncoder encode, double padding, int crop_size);

/// Code = the crop itself, flattened row-major.
LatentCode flatten_encoder(const ImageF& crop);

/// Hand-built depth encoder: flattened crop where surface pixels map to
/// 1 - 0.5 * (d - d_nearest) / depth_scale and empty pixels to 0, which makes
/// codes independent of the object's absolute distance.
struct DepthCropEncoder {
  double depth_scale = 100.0;
  LatentCode operator()(const ImageF& crop) const;
};

}  // namespace aae
