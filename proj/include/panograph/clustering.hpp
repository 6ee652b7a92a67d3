#pragma once

#include "panograph/common.hpp"
#include "panograph/scene_io.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace panograph {

// Per-point cluster ids. After compact(), ids are 0..n_clusters-1, numbered
// by first appearance in point order.
struct ClusterAssignment {
  static constexpr std::int32_t kNoise = -1;

  std::vector<std::int32_t> labels;
  std::int32_t n_clusters = 0;

  void compact();
  std::vector<std::uint32_t> cluster_sizes() const;
  std::size_t noise_count() const;
};

// Points are scanned in index order; a border point reachable from several
// clusters joins the first one that reaches it.
ClusterAssignment dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts);

// Mutual-reachability MST -> single-linkage tree -> condensed tree ->
// excess-of-mass selection (the root is never selected). Core distance is the
// distance to the min_samples-th nearest point, counting the point itself.
// Zero-length links (coincident points) get twice the largest finite lambda.
ClusterAssignment hdbscan(std::span<const Vec3> points, std::size_t min_cluster_size, std::size_t min_samples);

// Flat-kernel mean shift seeded from every point. Modes are kept in order of
// decreasing support; a mode within bandwidth/2 of a kept one is merged into
// it. Each point joins the kept mode nearest to where its own seed stopped,
// which also covers seeds that hit max_iterations without converging.
ClusterAssignment meanshift(std::span<const Vec3> points, double bandwidth, std::size_t max_iterations = 300);

enum class ClusterMethod { hdbscan, dbscan, meanshift };

ClusterMethod parse_cluster_method(const std::string& name);
std::string to_string(ClusterMethod method);

struct OversegmentParams {
  ClusterMethod method = ClusterMethod::hdbscan;
  std::size_t min_cluster_size = 10;
  std::size_t min_samples = 5;
  double dbscan_eps = 0.5;
  std::size_t dbscan_min_pts = 5;
  double meanshift_bandwidth = 1.5;
  // Cluster each thing class on its own; otherwise all thing points jointly.
  bool per_class = true;
};

// Foreground (thing-class) points of a frame and their clusters. `assignment`
// is indexed like `point_indices`.
struct ForegroundClusters {
  std::vector<std::uint32_t> point_indices;
  ClusterAssignment assignment;
};

ClusterAssignment cluster_points(std::span<const Vec3> points, const OversegmentParams& params);

// Clusters the points whose semantic label is a thing class. Cluster ids are
// unique across classes (classes in ascending id order).
ForegroundClusters oversegment_foreground(const PointCloudFrame& frame, const ClassTable& classes,
                                          const OversegmentParams& params);

}  // namespace panograph
