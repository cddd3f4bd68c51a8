#pragma once

#include <Eigen/Core>

#include <vector>

namespace aae {

/// Exact nearest-neighbour search over a fixed 3D point set. Read-only after
/// construction, so concurrent queries are safe.
class KdTree {
 public:
  struct Hit {
    Eigen::Index index = -1;
    double squared_distance = 0;
  };

  explicit KdTree(Eigen::Matrix3Xd points);

  Eigen::Index size() const { return points_.cols(); }
  const Eigen::Matrix3Xd& points() const { return points_; }

  /// Closest point; ties resolved to the lower index. index = -1 if empty.
  Hit nearest(const Eigen::Vector3d& q) const;
  /// Up to k closest points, ascending distance.
  std::vector<Hit> knn(const Eigen::Vector3d& q, int k) const;

 private:
  struct Node {
    int begin, end;     // range in order_
    int left = -1, right = -1;
    int axis = -1;      // -1: leaf
    double split = 0;
  };

  int build(int begin, int end, int depth);
  template <typename Visit>
  void search(int node, const Eigen::Vector3d& q, double& bound, Visit&& visit) const;

  Eigen::Matrix3Xd points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace aae
