#include "aae/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace aae {

namespace {
constexpr int kLeafSize = 8;

bool closer(const KdTree::Hit& a, const KdTree::Hit& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}
}  // namespace

KdTree::KdTree(Eigen::Matrix3Xd points) : points_(std::move(points)) {
  order_.resize(points_.cols());
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) build(0, static_cast<int>(order_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.col(order_[i]));
    hi = hi.cwiseMax(points_.col(order_[i]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi(axis) == lo(axis)) return id;  // all points coincide
  (void)depth;

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_(axis, a), pb = points_(axis, b);
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_(axis, order_[mid]);
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

template <typename Visit>
void KdTree::search(int node_id, const Eigen::Vector3d& q, double& bound,
                    Visit&& visit) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      visit(Hit{idx, (points_.col(idx) - q).squaredNorm()});
    }
    return;
  }
  const double diff = q(node.axis) - node.split;
  const int near = diff < 0 ? node.left : node.right;
  const int far = diff < 0 ? node.right : node.left;
  search(near, q, bound, visit);
  // <= keeps equal-distance candidates on the far side reachable for the
  // index tie-break.
  if (diff * diff <= bound) search(far, q, bound, visit);
}

KdTree::Hit KdTree::nearest(const Eigen::Vector3d& q) const {
  Hit best{-1, std::numeric_limits<double>::infinity()};
  if (nodes_.empty()) return best;
  double bound = best.squared_distance;
  search(0, q, bound, [&](const Hit& h) {
    if (closer(h, best)) {
      best = h;
      bound = h.squared_distance;
    }
  });
  return best;
}

std::vector<KdTree::Hit> KdTree::knn(const Eigen::Vector3d& q, int k) const {
  std::vector<Hit> heap;  // max-heap under `closer`
  if (nodes_.empty() || k <= 0) return heap;
  double bound = std::numeric_limits<double>::infinity();
  search(0, q, bound, [&](const Hit& h) {
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(h);
      std::push_heap(heap.begin(), heap.end(), closer);
    } else if (closer(h, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), closer);
      heap.back() = h;
      std::push_heap(heap.begin(), heap.end(), closer);
    }
    if (static_cast<int>(heap.size()) == k) bound = heap.front().squared_distance;
  });
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

}  // namespace aae
