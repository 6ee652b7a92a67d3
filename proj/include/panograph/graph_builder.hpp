#pragma once

#include "panograph/clustering.hpp"
#include "panograph/common.hpp"
#include "panograph/scene_io.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace panograph {

inline constexpr std::size_t kProbabilityWidth = 19;
inline constexpr std::size_t kPointFeatureWidth = 3 + 1 + kProbabilityWidth + 1;  // 24
inline constexpr std::size_t kEmbeddingWidth = 32;
inline constexpr std::size_t kNodeFeatureWidth = kEmbeddingWidth + 3;  // 35

// Column layout of a point feature row.
namespace feature_column {
inline constexpr std::size_t normal = 0;
inline constexpr std::size_t intensity = 3;
inline constexpr std::size_t probabilities = 4;
inline constexpr std::size_t height = 4 + kProbabilityWidth;
}  // namespace feature_column

// Per-point unit normals from the covariance of the k nearest neighbours
// (the point itself included). The eigenvector of the smallest eigenvalue is
// oriented towards `sensor`; when the sensor lies in the tangent plane the
// first non-zero component is made positive. Rank-deficient neighbourhoods
// (fewer than 3 points, collinear or coincident points) yield a zero normal.
std::vector<Vec3> estimate_normals(std::span<const Vec3> points, std::size_t k, const Vec3& sensor = Vec3::Zero());

// Robust ground height: the 5th percentile of all z values (0 for empty frames).
double estimate_ground_height(const PointCloudFrame& frame);

// Rows of class probabilities (width = number of classes), one per frame point.
Matrix one_hot_probabilities(const std::vector<std::uint16_t>& semantic, std::size_t num_classes);

// M x 24 feature rows for the listed frame points:
// normal(3) | intensity(1) | class probabilities padded/truncated to 19 | height above ground(1).
// `probabilities` has one row per frame point. Throws DataError if a used row
// does not sum to 1 within 1e-6.
Matrix build_point_features(const PointCloudFrame& frame, std::span<const std::uint32_t> point_indices,
                            std::span<const Vec3> normals, const Matrix& probabilities, double ground_height);

struct ClusterGraph {
  std::vector<std::vector<std::uint32_t>> node_point_indices;  // frame point ids
  Matrix centroid;       // N x 3
  Matrix embedding;      // N x 32
  Matrix node_feature;   // N x 35 = embedding | centroid
  Matrix edge_cosine;    // N x N
  Matrix edge_distance;  // N x N

  std::size_t num_nodes() const { return node_point_indices.size(); }
};

// Per-cluster mean position (N x 3) of the members of a compacted assignment.
Matrix cluster_centroids(const PointCloudFrame& frame, const ForegroundClusters& clusters);

// Complete graph over the clusters. Cosine similarity involving a zero
// embedding is 0.
ClusterGraph build_cluster_graph(const PointCloudFrame& frame, const ForegroundClusters& clusters,
                                 const Matrix& embeddings);

nlohmann::json graph_to_json(const ClusterGraph& graph, const std::vector<std::uint8_t>* labels = nullptr);

// N x N, row-major, 1 = same instance.
struct EdgeLabelMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  bool operator==(const EdgeLabelMatrix&) const = default;
};

// Ground-truth edge labels via packed (instance << 32 | cluster) keys: every
// pair of clusters observed inside one instance is marked, plus the diagonal.
// `cluster_ids` must be non-noise and < n_clusters; ids must fit in 32 bits
// (InputError otherwise).
EdgeLabelMatrix associate_clusters(std::span<const std::int64_t> cluster_ids, std::span<const std::int64_t> instance_ids,
                                   std::size_t n_clusters);

// Convenience for pipeline use: drops noise points and points with instance 0.
EdgeLabelMatrix associate_clusters(const PointCloudFrame& frame, const ForegroundClusters& clusters);

}  // namespace panograph
