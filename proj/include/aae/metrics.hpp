#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aae/geometry.hpp"
#include "aae/image.hpp"
#include "aae/mesh.hpp"

namespace aae {

/// Visible Surface Discrepancy settings (step cost).
struct VsdParams {
  double tau = 20.0;           // depth-difference tolerance, mm
  double delta = 15.0;         // visibility tolerance, mm
  double threshold = 0.3;      // a pose is correct when err < threshold
  double min_visibility = 0.1; // records at or below this are not evaluated

  void validate() const;
};

struct VsdResult {
  double error = 1.0;       // in [0, 1]
  double visibility = 0.0;  // visible fraction of the ground-truth silhouette
};

/// Visibility mask of a rendered model against the scene: rendered depth > 0
/// and (scene invalid or rendered <= scene + delta).
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> visibility_mask(
    const DepthImage& rendered, const DepthImage& scene, double delta);

/// VSD between two already rendered depth maps. Throws kDegenerate when the
/// ground-truth rendering is empty.
VsdResult vsd_from_renders(const DepthImage& est, const DepthImage& gt,
                           const DepthImage& scene, const VsdParams& params);

/// Renders the model at both poses and compares visible surfaces. An empty
/// visibility union counts as error 1.
VsdResult vsd_error(const TriangleMesh& mesh, const Posed& est, const Posed& gt,
                    const DepthImage& scene_depth, const Intrinsicsd& k,
                    const VsdParams& params = {});

/// Mean distance between corresponding transformed vertices.
double add_error(const TriangleMesh& mesh, const Posed& est, const Posed& gt);
/// Mean distance from each gt-transformed vertex to the closest
/// est-transformed vertex (symmetric objects).
double adi_error(const TriangleMesh& mesh, const Posed& est, const Posed& gt);
double add_error(const Eigen::Matrix3Xd& points, const Posed& est, const Posed& gt);
double adi_error(const Eigen::Matrix3Xd& points, const Posed& est, const Posed& gt);

/// err_add < k_m * diameter.
bool add_correct(double err_add, double diameter, double k_m = 0.1);

struct EvalRecord {
  std::string object_id;
  Posed est_pose;
  Posed gt_pose;
  std::optional<double> err_vsd;
  std::optional<double> err_add;
  std::optional<double> err_adi;
  double visibility = 1.0;
};

/// Records with visibility > min_visibility.
std::vector<EvalRecord> filter_visible(const std::vector<EvalRecord>& records,
                                       double min_visibility);

/// Fraction of records with err_vsd < threshold; a record without err_vsd is
/// counted as incorrect. Throws kEmptyInput on an empty set.
double recall_at(const std::vector<EvalRecord>& records, double threshold);

/// Area under recall(e) for e in [0, 1], integrated exactly over the step
/// function: mean of (1 - clamp(err, 0, 1)).
double auc_vsd(const std::vector<EvalRecord>& records);

}  // namespace aae
