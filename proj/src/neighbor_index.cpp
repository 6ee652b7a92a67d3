#include "panograph/neighbor_index.hpp"

#include <algorithm>
#include <numeric>

namespace panograph {

namespace {
constexpr std::uint32_t kLeafSize = 12;

bool heap_less(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}
}  // namespace

NeighborIndex::NeighborIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t NeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, -1, 0.0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Left subtree holds coordinates <= split, right subtree >= split.
void NeighborIndex::radius_rec(std::int32_t id, const Vec3& q, double r2, std::vector<std::uint32_t>& out) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      if (squared_distance(points_[order_[i]], q) <= r2) out.push_back(order_[i]);
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const double d2 = diff * diff;
  if (diff <= 0.0 || d2 <= r2) radius_rec(node.left, q, r2, out);
  if (diff >= 0.0 || d2 <= r2) radius_rec(node.right, q, r2, out);
}

std::vector<std::uint32_t> NeighborIndex::radius_query(const Vec3& q, double radius) const {
  std::vector<std::uint32_t> out;
  if (points_.empty() || radius < 0.0) return out;
  radius_rec(0, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void NeighborIndex::knn_rec(std::int32_t id, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], squared_distance(points_[order_[i]], q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), heap_less);
      } else if (heap_less(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), heap_less);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), heap_less);
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  knn_rec(near, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().squared_distance) knn_rec(far, q, k, heap);
}

std::vector<Neighbor> NeighborIndex::knn(const Vec3& q, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (points_.empty() || k == 0) return heap;
  heap.reserve(k + 1);
  knn_rec(0, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), heap_less);
  return heap;
}

NeighborIndex build_index(std::span<const Vec3> points) {
  return NeighborIndex(std::vector<Vec3>(points.begin(), points.end()));
}

}  // namespace panograph
