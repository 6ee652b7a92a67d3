#pragma once

#include "panograph/clustering.hpp"
#include "panograph/common.hpp"
#include "panograph/graph_builder.hpp"
#include "panograph/scene_io.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace panograph {

inline constexpr std::size_t kKernelVolume = 27;
inline constexpr std::size_t kConv1Width = 64;
inline constexpr std::size_t kSage1Width = 64;
inline constexpr std::size_t kMlpHiddenWidth = 32;

// Kernel offset k in [0, 27) <-> (dx, dy, dz) in {-1, 0, 1}^3, k = 9(dx+1) + 3(dy+1) + (dz+1).
std::array<int, 3> kernel_offset(std::size_t k);
inline constexpr std::size_t kCenterOffset = 13;

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> s);
  std::size_t size() const { return data.size(); }
};

// Weights are stored input-major, so a layer computes y = x W + b on row vectors.
// Sparse conv weights are [27][in][out].
struct EdgeNetParams {
  Tensor conv1_weight{"conv1.weight", {kKernelVolume, kPointFeatureWidth, kConv1Width}};
  Tensor conv1_bias{"conv1.bias", {kConv1Width}};
  Tensor conv2_weight{"conv2.weight", {kKernelVolume, kConv1Width, kEmbeddingWidth}};
  Tensor conv2_bias{"conv2.bias", {kEmbeddingWidth}};
  Tensor sage1_self{"sage1.self", {kNodeFeatureWidth, kSage1Width}};
  Tensor sage1_neigh{"sage1.neigh", {kNodeFeatureWidth, kSage1Width}};
  Tensor sage1_bias{"sage1.bias", {kSage1Width}};
  Tensor sage2_self{"sage2.self", {kSage1Width, kEmbeddingWidth}};
  Tensor sage2_neigh{"sage2.neigh", {kSage1Width, kEmbeddingWidth}};
  Tensor sage2_bias{"sage2.bias", {kEmbeddingWidth}};
  Tensor mlp1_weight{"mlp1.weight", {2 * kEmbeddingWidth, kMlpHiddenWidth}};
  Tensor mlp1_bias{"mlp1.bias", {kMlpHiddenWidth}};
  Tensor mlp2_weight{"mlp2.weight", {kMlpHiddenWidth, 2}};
  Tensor mlp2_bias{"mlp2.bias", {2}};

  static constexpr std::size_t kNumTensors = 14;

  std::array<Tensor*, kNumTensors> tensors();
  std::array<const Tensor*, kNumTensors> tensors() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();

  // Uniform He initialisation (bound sqrt(6 / fan_in)), zero biases, values
  // rounded to float32.
  static EdgeNetParams initialize(std::uint64_t seed);
};

// ---------------------------------------------------------------------------
// Sparse voxel embedding

struct SparseVoxelTensor {
  std::vector<std::array<std::int32_t, 3>> sites;  // unique, in order of first occupying point
  Matrix features;                                 // sites x channels
  std::vector<std::uint32_t> point_to_site;
  double voxel_size = 0.1;
};

// Site = floor(coordinate / voxel_size); site features are the mean of the
// features of the points it holds.
SparseVoxelTensor voxelize(std::span<const Vec3> points, const Matrix& features, double voxel_size);

// For each kernel offset, the (input site, output site) pairs it connects.
struct Rulebook {
  std::array<std::vector<std::pair<std::uint32_t, std::uint32_t>>, kKernelVolume> pairs;
};
Rulebook build_rulebook(const std::vector<std::array<std::int32_t, 3>>& sites);

// Submanifold 3x3x3 convolution + ReLU over the active sites.
Matrix sparse_conv(const Rulebook& rules, const Matrix& input, const Tensor& weight, const Tensor& bias);
SparseVoxelTensor sparse_conv_forward(const SparseVoxelTensor& tensor, const Tensor& weight, const Tensor& bias);

// Mean of the site features of each cluster's points (a point contributes its
// site's features). `point_cluster` is aligned with `point_to_site`.
Matrix cluster_avg_pool(const Matrix& site_features, std::span<const std::uint32_t> point_to_site,
                        std::span<const std::int32_t> point_cluster, std::size_t n_clusters);

// h_i' = act(h_i W_self + mean_{j != i} h_j W_neigh + b); the neighbour mean
// is zero for a single node.
Matrix sage_conv_forward(const Matrix& h, const Tensor& self_weight, const Tensor& neigh_weight, const Tensor& bias,
                         bool relu);

// softmax(L2(ReLU(L1(h_i | h_j)))) per listed ordered pair; row = (p_disconnect, p_connect).
Matrix edge_mlp_forward(const Matrix& h, std::span<const std::pair<std::size_t, std::size_t>> edges,
                        const EdgeNetParams& params);

// ---------------------------------------------------------------------------
// Whole-frame model

struct FeatureOptions {
  double voxel_size = 0.1;
  std::size_t normal_neighbors = 16;
  Vec3 sensor = Vec3::Zero();
};

// Everything the network consumes for one frame. Only clustered (non-noise)
// foreground points take part.
struct EdgeNetInput {
  SparseVoxelTensor voxels;        // site features are the 24-wide point features
  Rulebook rules;
  std::vector<std::int32_t> point_cluster;  // aligned with voxels.point_to_site
  Matrix centroid;                 // N x 3
  std::size_t num_clusters() const { return static_cast<std::size_t>(centroid.rows()); }
};

// `probabilities` (frame points x classes) defaults to one-hot of frame.semantic.
EdgeNetInput prepare_input(const PointCloudFrame& frame, const ClassTable& classes, const ForegroundClusters& clusters,
                           const FeatureOptions& options, const Matrix* probabilities = nullptr);

struct ForwardCache {
  Matrix conv1;     // S x 64, post-ReLU
  Matrix conv2;     // S x 32, post-ReLU
  Matrix node_in;   // N x 35
  Matrix sage1;     // N x 64, post-ReLU
  Matrix sage2;     // N x 32
  Matrix hidden;    // N^2 x 32, post-ReLU, row i*N + j
  Matrix probs;     // N^2 x 2
};

// N x N matrix of p_connect for every ordered pair (diagonal included).
Matrix forward(const EdgeNetInput& input, const EdgeNetParams& params, ForwardCache* cache = nullptr);
Matrix forward(const PointCloudFrame& frame, const ClassTable& classes, const ForegroundClusters& clusters,
               const EdgeNetParams& params, const FeatureOptions& options = {});

struct LossOptions {
  // Inverse-frequency weighting of the positive and negative edge classes.
  bool class_weights = false;
};

struct LossResult {
  double loss = 0.0;
  EdgeNetParams grads;
  Matrix p_connect;  // N x N
};

// Mean cross-entropy over off-diagonal ordered pairs (weighted mean when class
// weights are on) and its gradient with respect to every parameter.
LossResult loss_and_grad(const EdgeNetInput& input, const EdgeLabelMatrix& labels, const EdgeNetParams& params,
                         const LossOptions& options = {});

// Loss only, for finite-difference checks.
double loss_value(const EdgeNetInput& input, const EdgeLabelMatrix& labels, const EdgeNetParams& params,
                  const LossOptions& options = {});

}  // namespace panograph
