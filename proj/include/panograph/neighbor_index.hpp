#pragma once

#include "panograph/common.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace panograph {

struct Neighbor {
  std::uint32_t index = 0;
  double squared_distance = 0.0;
};

// Static 3-D kd-tree. Queries are exact: radius queries return every point
// with squared distance <= r^2 and k-NN results are ordered by
// (squared distance, index).
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  // Indices in ascending order.
  std::vector<std::uint32_t> radius_query(const Vec3& q, double radius) const;
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range in order_ (leaves)
    std::int32_t left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void radius_rec(std::int32_t node, const Vec3& q, double r2, std::vector<std::uint32_t>& out) const;
  void knn_rec(std::int32_t node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

NeighborIndex build_index(std::span<const Vec3> points);

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace panograph
