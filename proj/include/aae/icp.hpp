#pragma once

#include <optional>
#include <vector>

#include "aae/geometry.hpp"
#include "aae/image.hpp"
#include "aae/mesh.hpp"
#include "aae/rng.hpp"

namespace aae {

struct PointCloud {
  Eigen::Matrix3Xd points;
  /// Empty, or one unit normal per point.
  Eigen::Matrix3Xd normals;

  Eigen::Index size() const { return points.cols(); }
  bool has_normals() const { return normals.cols() == points.cols() && size() > 0; }
};

/// One point per pixel with depth > 0, taken at the pixel centre.
PointCloud backproject(const DepthImage& depth, const Intrinsicsd& k);

/// Normals from the smallest-eigenvalue direction of each point's k-neighbour
/// covariance, oriented toward the camera centre. Points whose neighbourhood
/// is collinear (no unique plane) are dropped; `dropped` reports how many.
PointCloud estimate_normals(const PointCloud& cloud, int k_neighbors = 12,
                            Eigen::Index* dropped = nullptr);

/// Median distance from each point to its nearest other point.
double median_spacing(const Eigen::Matrix3Xd& points);

/// Surface samples (object frame) that are visible from the camera at `pose`,
/// checked against a z-buffer render with 1 mm slack.
Eigen::Matrix3Xd sample_visible_points(const TriangleMesh& mesh, const Posed& pose,
                                       const Intrinsicsd& k, int n_samples, Rng& rng);

struct IcpConfig {
  int max_iterations = 50;
  /// Correspondence gate for the first iteration, mm. Unset: three times the
  /// median initial nearest-neighbour distance, but at least min_threshold.
  std::optional<double> initial_threshold;
  double threshold_decay = 0.9;
  /// Floor of the decaying gate. Unset: three times the scene median spacing,
  /// but at least convergence_eps.
  std::optional<double> min_threshold;
  int min_correspondences = 6;
  /// Iteration stops once an update moves model points by less than this
  /// (RMS, mm); such an update is not applied.
  double convergence_eps = 0.1;

  void validate() const;
};

struct IcpStats {
  int iterations = 0;
  double final_residual = 0;   // median |point-to-plane| residual, mm
  int correspondences = 0;
  double final_threshold = 0;
  /// Median residual after every accepted update.
  std::vector<double> residual_history;
};

struct IcpResult {
  Posed pose;
  IcpStats stats;
};

/// 1-DoF refinement along the camera-to-object ray; rotation is untouched.
/// Throws kNoOverlap when no model point finds a scene partner.
Posed icp_refine_z(const Eigen::Matrix3Xd& model, const PointCloud& scene,
                   const Posed& init, const IcpConfig& cfg = {});

/// Point-to-plane ICP (model -> scene, scene normals) with a multiplicatively
/// shrinking correspondence gate and step halving when the median residual
/// would grow.
IcpResult icp_refine(const Eigen::Matrix3Xd& model, const PointCloud& scene,
                     const Posed& init, const IcpConfig& cfg = {});

}  // namespace aae
