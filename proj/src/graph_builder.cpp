#include "panograph/graph_builder.hpp"

#include "panograph/neighbor_index.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace panograph {

std::vector<Vec3> estimate_normals(std::span<const Vec3> points, std::size_t k, const Vec3& sensor) {
  if (k < 3) throw InputError("estimate_normals: k must be >= 3");
  std::vector<Vec3> normals(points.size(), Vec3::Zero());
  if (points.size() < 3) return normals;

  const NeighborIndex index = build_index(points);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nb = index.knn(points[i], k);
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nb) mean += points[n.index];
    mean /= static_cast<double>(nb.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& n : nb) {
      const Vec3 d = points[n.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nb.size());
    solver.compute(cov);
    const Vec3 ev = solver.eigenvalues();  // ascending
    if (!(ev[2] > 0.0) || ev[1] <= 1e-10 * ev[2]) continue;
    Vec3 normal = solver.eigenvectors().col(0).normalized();
    const double facing = normal.dot(sensor - points[i]);
    if (facing < 0.0) {
      normal = -normal;
    } else if (facing == 0.0) {
      for (int a = 0; a < 3; ++a) {
        if (normal[a] != 0.0) {
          if (normal[a] < 0.0) normal = -normal;
          break;
        }
      }
    }
    normals[i] = normal;
  }
  return normals;
}

double estimate_ground_height(const PointCloudFrame& frame) {
  if (frame.points.empty()) return 0.0;
  std::vector<float> z(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) z[i] = frame.points[i].z;
  const std::size_t k = (z.size() - 1) * 5 / 100;
  std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k), z.end());
  return z[k];
}

Matrix one_hot_probabilities(const std::vector<std::uint16_t>& semantic, std::size_t num_classes) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(semantic.size()), static_cast<Eigen::Index>(num_classes));
  for (std::size_t i = 0; i < semantic.size(); ++i) {
    if (semantic[i] >= num_classes) throw DataError("semantic id " + std::to_string(semantic[i]) + " out of range");
    p(static_cast<Eigen::Index>(i), semantic[i]) = 1.0;
  }
  return p;
}

Matrix build_point_features(const PointCloudFrame& frame, std::span<const std::uint32_t> point_indices,
                            std::span<const Vec3> normals, const Matrix& probabilities, double ground_height) {
  if (normals.size() != point_indices.size()) throw ShapeError("build_point_features: one normal per listed point");
  if (static_cast<std::size_t>(probabilities.rows()) != frame.size()) {
    throw ShapeError("build_point_features: probability rows must match the frame size");
  }
  const auto m = static_cast<Eigen::Index>(point_indices.size());
  Matrix features = Matrix::Zero(m, static_cast<Eigen::Index>(kPointFeatureWidth));
  const auto copy_width = std::min<Eigen::Index>(probabilities.cols(), kProbabilityWidth);
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::uint32_t i = point_indices[static_cast<std::size_t>(r)];
    const auto prob = probabilities.row(i);
    if (std::abs(prob.sum() - 1.0) > 1e-6) {
      throw DataError("class probabilities of point " + std::to_string(i) + " do not sum to 1");
    }
    const Vec3& n = normals[static_cast<std::size_t>(r)];
    features(r, feature_column::normal + 0) = n.x();
    features(r, feature_column::normal + 1) = n.y();
    features(r, feature_column::normal + 2) = n.z();
    features(r, feature_column::intensity) = normalized_intensity(frame.points[i].intensity);
    features.row(r).segment(feature_column::probabilities, copy_width) = prob.head(copy_width);
    features(r, feature_column::height) = static_cast<double>(frame.points[i].z) - ground_height;
  }
  return features;
}

Matrix cluster_centroids(const PointCloudFrame& frame, const ForegroundClusters& clusters) {
  const auto n = static_cast<Eigen::Index>(clusters.assignment.n_clusters);
  Matrix centroid = Matrix::Zero(n, 3);
  std::vector<double> count(static_cast<std::size_t>(n), 0.0);
  for (std::size_t k = 0; k < clusters.point_indices.size(); ++k) {
    const auto c = clusters.assignment.labels[k];
    if (c == ClusterAssignment::kNoise) continue;
    centroid.row(c) += frame.position(clusters.point_indices[k]).transpose();
    count[static_cast<std::size_t>(c)] += 1.0;
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    if (count[static_cast<std::size_t>(c)] > 0.0) centroid.row(c) /= count[static_cast<std::size_t>(c)];
  }
  return centroid;
}

ClusterGraph build_cluster_graph(const PointCloudFrame& frame, const ForegroundClusters& clusters,
                                 const Matrix& embeddings) {
  const auto n = static_cast<Eigen::Index>(clusters.assignment.n_clusters);
  if (embeddings.rows() != n || embeddings.cols() != static_cast<Eigen::Index>(kEmbeddingWidth)) {
    throw ShapeError("build_cluster_graph: embeddings must be N x 32");
  }
  ClusterGraph g;
  g.node_point_indices.resize(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < clusters.point_indices.size(); ++k) {
    const auto c = clusters.assignment.labels[k];
    if (c != ClusterAssignment::kNoise) g.node_point_indices[static_cast<std::size_t>(c)].push_back(clusters.point_indices[k]);
  }
  g.centroid = cluster_centroids(frame, clusters);
  g.embedding = embeddings;
  g.node_feature.resize(n, static_cast<Eigen::Index>(kNodeFeatureWidth));
  g.node_feature.leftCols(kEmbeddingWidth) = embeddings;
  g.node_feature.rightCols(3) = g.centroid;

  g.edge_cosine = Matrix::Zero(n, n);
  g.edge_distance = Matrix::Zero(n, n);
  const Vector norms = embeddings.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double denom = norms[i] * norms[j];
      g.edge_cosine(i, j) = denom > 0.0 ? embeddings.row(i).dot(embeddings.row(j)) / denom : 0.0;
      g.edge_distance(i, j) = (g.centroid.row(i) - g.centroid.row(j)).norm();
    }
  }
  return g;
}

nlohmann::json graph_to_json(const ClusterGraph& graph, const std::vector<std::uint8_t>* labels) {
  using nlohmann::json;
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  json nodes = json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> feature(graph.node_feature.row(i).begin(), graph.node_feature.row(i).end());
    nodes.push_back({{"id", i},
                     {"num_points", graph.node_point_indices[static_cast<std::size_t>(i)].size()},
                     {"centroid", {graph.centroid(i, 0), graph.centroid(i, 1), graph.centroid(i, 2)}},
                     {"feature", feature}});
  }
  json edges = json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      json e = {{"from", i}, {"to", j}, {"cosine", graph.edge_cosine(i, j)}, {"distance", graph.edge_distance(i, j)}};
      if (labels) e["label"] = (*labels)[static_cast<std::size_t>(i * n + j)] != 0;
      edges.push_back(std::move(e));
    }
  }
  return {{"num_nodes", n}, {"nodes", nodes}, {"edges", edges}};
}

EdgeLabelMatrix associate_clusters(std::span<const std::int64_t> cluster_ids, std::span<const std::int64_t> instance_ids,
                                   std::size_t n_clusters) {
  if (cluster_ids.size() != instance_ids.size()) throw InputError("associate_clusters: arrays differ in length");
  constexpr std::uint64_t kOffset = std::uint64_t{1} << 32;
  if (n_clusters > kOffset) throw InputError("associate_clusters: too many clusters");

  std::vector<std::uint64_t> combo(cluster_ids.size());
  for (std::size_t i = 0; i < combo.size(); ++i) {
    const std::int64_t c = cluster_ids[i], l = instance_ids[i];
    if (c < 0 || static_cast<std::uint64_t>(c) >= n_clusters) {
      throw InputError("associate_clusters: cluster id " + std::to_string(c) + " outside [0, n_clusters)");
    }
    if (l < 0 || static_cast<std::uint64_t>(l) >= kOffset) {
      throw InputError("associate_clusters: instance id " + std::to_string(l) + " does not fit in 32 bits");
    }
    combo[i] = static_cast<std::uint64_t>(c) + kOffset * static_cast<std::uint64_t>(l);
  }
  std::sort(combo.begin(), combo.end());
  combo.erase(std::unique(combo.begin(), combo.end()), combo.end());

  EdgeLabelMatrix out;
  out.n = n_clusters;
  out.values.assign(n_clusters * n_clusters, 0);
  for (std::size_t i = 0; i < n_clusters; ++i) out.values[i * n_clusters + i] = 1;

  // Sorted keys group by instance; mark every ordered pair inside a group.
  std::size_t begin = 0;
  while (begin < combo.size()) {
    const std::uint64_t gt = combo[begin] / kOffset;
    std::size_t end = begin;
    while (end < combo.size() && combo[end] / kOffset == gt) ++end;
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t b = begin; b < end; ++b) {
        out.values[(combo[a] % kOffset) * n_clusters + combo[b] % kOffset] = 1;
      }
    }
    begin = end;
  }
  return out;
}

EdgeLabelMatrix associate_clusters(const PointCloudFrame& frame, const ForegroundClusters& clusters) {
  std::vector<std::int64_t> c, l;
  for (std::size_t k = 0; k < clusters.point_indices.size(); ++k) {
    const auto label = clusters.assignment.labels[k];
    const auto inst = frame.instance[clusters.point_indices[k]];
    if (label == ClusterAssignment::kNoise || inst == 0) continue;
    c.push_back(label);
    l.push_back(inst);
  }
  return associate_clusters(c, l, static_cast<std::size_t>(clusters.assignment.n_clusters));
}

}  // namespace panograph
