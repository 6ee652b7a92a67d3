#include "panograph/edgenet.hpp"

#include "panograph/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace panograph {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstRow = Eigen::Map<const Eigen::RowVectorXd>;
using MutRow = Eigen::Map<Eigen::RowVectorXd>;

ConstMap as_matrix(const Tensor& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1])};
}
MutMap as_matrix(Tensor& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1])};
}
ConstRow as_row(const Tensor& t) { return {t.data.data(), static_cast<Eigen::Index>(t.size())}; }
MutRow as_row(Tensor& t) { return {t.data.data(), static_cast<Eigen::Index>(t.size())}; }

ConstMap kernel_slice(const Tensor& w, std::size_t k) {
  const std::size_t in = w.shape[1], out = w.shape[2];
  return {w.data.data() + k * in * out, static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out)};
}
MutMap kernel_slice(Tensor& w, std::size_t k) {
  const std::size_t in = w.shape[1], out = w.shape[2];
  return {w.data.data() + k * in * out, static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out)};
}

std::uint64_t pack_site(const std::array<std::int32_t, 3>& c) {
  constexpr std::int64_t kBias = std::int64_t{1} << 20;
  std::uint64_t key = 0;
  for (int a = 0; a < 3; ++a) key = (key << 21) | static_cast<std::uint64_t>(c[static_cast<std::size_t>(a)] + kBias);
  return key;
}

void check_conv_shapes(const Matrix& input, const Tensor& weight, const Tensor& bias) {
  if (weight.shape.size() != 3 || weight.shape[0] != kKernelVolume) throw ShapeError("sparse conv: weight must be [27][in][out]");
  if (static_cast<std::size_t>(input.cols()) != weight.shape[1]) {
    throw ShapeError("sparse conv: input width " + std::to_string(input.cols()) + " does not match layer input " +
                     std::to_string(weight.shape[1]));
  }
  if (bias.size() != weight.shape[2]) throw ShapeError("sparse conv: bias width mismatch");
}

Matrix relu(Matrix m) { return m.cwiseMax(0.0); }

// dL/d(pre-activation) given dL/d(output) of a ReLU layer.
Matrix relu_backward(const Matrix& grad_out, const Matrix& out) {
  return (out.array() > 0.0).select(grad_out, 0.0);
}

Matrix neighbor_mean(const Matrix& h) {
  const Eigen::Index n = h.rows();
  Matrix m = Matrix::Zero(n, h.cols());
  if (n > 1) {
    const Eigen::RowVectorXd sum = h.colwise().sum();
    m = (-h).rowwise() + sum;
    m /= static_cast<double>(n - 1);
  }
  return m;
}

// Conv gradient: accumulates weight/bias grads and returns dL/d(input).
Matrix sparse_conv_backward(const Rulebook& rules, const Matrix& input, const Matrix& grad_pre, const Tensor& weight,
                            Tensor& grad_weight, Tensor& grad_bias, bool need_input_grad) {
  as_row(grad_bias) += grad_pre.colwise().sum();
  Matrix grad_in;
  if (need_input_grad) grad_in = Matrix::Zero(input.rows(), input.cols());
  for (std::size_t k = 0; k < kKernelVolume; ++k) {
    const auto& pairs = rules.pairs[k];
    if (pairs.empty()) continue;
    auto gw = kernel_slice(grad_weight, k);
    const auto w = kernel_slice(weight, k);
    if (k == kCenterOffset) {
      gw.noalias() += input.transpose() * grad_pre;
      if (need_input_grad) grad_in.noalias() += grad_pre * w.transpose();
      continue;
    }
    const auto p = static_cast<Eigen::Index>(pairs.size());
    Matrix gathered_in(p, input.cols()), gathered_out(p, grad_pre.cols());
    for (Eigen::Index r = 0; r < p; ++r) {
      gathered_in.row(r) = input.row(pairs[static_cast<std::size_t>(r)].first);
      gathered_out.row(r) = grad_pre.row(pairs[static_cast<std::size_t>(r)].second);
    }
    gw.noalias() += gathered_in.transpose() * gathered_out;
    if (need_input_grad) {
      const Matrix contrib = gathered_out * w.transpose();
      for (Eigen::Index r = 0; r < p; ++r) grad_in.row(pairs[static_cast<std::size_t>(r)].first) += contrib.row(r);
    }
  }
  return grad_in;
}

Matrix sparse_conv_pre(const Rulebook& rules, const Matrix& input, const Tensor& weight, const Tensor& bias) {
  check_conv_shapes(input, weight, bias);
  Matrix out(input.rows(), static_cast<Eigen::Index>(weight.shape[2]));
  out.rowwise() = as_row(bias);
  for (std::size_t k = 0; k < kKernelVolume; ++k) {
    const auto& pairs = rules.pairs[k];
    if (pairs.empty()) continue;
    const auto w = kernel_slice(weight, k);
    if (k == kCenterOffset) {
      out.noalias() += input * w;
      continue;
    }
    const auto p = static_cast<Eigen::Index>(pairs.size());
    Matrix gathered(p, input.cols());
    for (Eigen::Index r = 0; r < p; ++r) gathered.row(r) = input.row(pairs[static_cast<std::size_t>(r)].first);
    const Matrix contrib = gathered * w;
    for (Eigen::Index r = 0; r < p; ++r) out.row(pairs[static_cast<std::size_t>(r)].second) += contrib.row(r);
  }
  return out;
}

Matrix sage_pre(const Matrix& h, const Tensor& self_weight, const Tensor& neigh_weight, const Tensor& bias) {
  if (static_cast<std::size_t>(h.cols()) != self_weight.shape[0] || self_weight.shape != neigh_weight.shape ||
      bias.size() != self_weight.shape[1]) {
    throw ShapeError("sage conv: shape mismatch");
  }
  Matrix out = h * as_matrix(self_weight);
  if (h.rows() > 1) out.noalias() += neighbor_mean(h) * as_matrix(neigh_weight);
  out.rowwise() += as_row(bias);
  return out;
}

// Returns dL/dh and accumulates parameter grads. `grad_pre` is w.r.t. the
// pre-activation.
Matrix sage_backward(const Matrix& h, const Matrix& grad_pre, const Tensor& self_weight, const Tensor& neigh_weight,
                     Tensor& g_self, Tensor& g_neigh, Tensor& g_bias) {
  const Eigen::Index n = h.rows();
  as_matrix(g_self).noalias() += h.transpose() * grad_pre;
  as_row(g_bias) += grad_pre.colwise().sum();
  Matrix grad_h = grad_pre * as_matrix(self_weight).transpose();
  if (n > 1) {
    as_matrix(g_neigh).noalias() += neighbor_mean(h).transpose() * grad_pre;
    const Matrix grad_mean = grad_pre * as_matrix(neigh_weight).transpose();
    grad_h += neighbor_mean(grad_mean);  // d mean_i / d h_j = 1/(n-1) for j != i
  }
  return grad_h;
}

struct EdgeHead {
  Matrix hidden;  // N^2 x 32 post-ReLU
  Matrix logits;  // N^2 x 2
  Matrix probs;   // N^2 x 2
};

EdgeHead edge_head(const Matrix& h, const EdgeNetParams& params) {
  const Eigen::Index n = h.rows();
  const auto w1 = as_matrix(params.mlp1_weight);
  const Matrix from = h * w1.topRows(kEmbeddingWidth);
  const Matrix to = h * w1.bottomRows(kEmbeddingWidth);
  const auto b1 = as_row(params.mlp1_bias);
  EdgeHead out;
  out.hidden.resize(n * n, static_cast<Eigen::Index>(kMlpHiddenWidth));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.hidden.row(i * n + j) = (from.row(i) + to.row(j) + b1).cwiseMax(0.0);
    }
  }
  out.logits = out.hidden * as_matrix(params.mlp2_weight);
  out.logits.rowwise() += as_row(params.mlp2_bias);
  out.probs.resize(out.logits.rows(), 2);
  for (Eigen::Index r = 0; r < out.logits.rows(); ++r) {
    const double m = std::max(out.logits(r, 0), out.logits(r, 1));
    const double e0 = std::exp(out.logits(r, 0) - m), e1 = std::exp(out.logits(r, 1) - m);
    out.probs(r, 0) = e0 / (e0 + e1);
    out.probs(r, 1) = e1 / (e0 + e1);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::array<int, 3> kernel_offset(std::size_t k) {
  return {static_cast<int>(k / 9) - 1, static_cast<int>((k / 3) % 3) - 1, static_cast<int>(k % 3) - 1};
}

Tensor::Tensor(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  data.assign(count, 0.0);
}

std::array<Tensor*, EdgeNetParams::kNumTensors> EdgeNetParams::tensors() {
  return {&conv1_weight, &conv1_bias, &conv2_weight, &conv2_bias, &sage1_self,  &sage1_neigh, &sage1_bias,
          &sage2_self,   &sage2_neigh, &sage2_bias, &mlp1_weight, &mlp1_bias, &mlp2_weight, &mlp2_bias};
}

std::array<const Tensor*, EdgeNetParams::kNumTensors> EdgeNetParams::tensors() const {
  return {&conv1_weight, &conv1_bias, &conv2_weight, &conv2_bias, &sage1_self,  &sage1_neigh, &sage1_bias,
          &sage2_self,   &sage2_neigh, &sage2_bias, &mlp1_weight, &mlp1_bias, &mlp2_weight, &mlp2_bias};
}

std::size_t EdgeNetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

bool EdgeNetParams::all_finite() const {
  for (const auto* t : tensors())
    for (double v : t->data)
      if (!std::isfinite(v)) return false;
  return true;
}

void EdgeNetParams::set_zero() {
  for (auto* t : tensors()) std::fill(t->data.begin(), t->data.end(), 0.0);
}

EdgeNetParams EdgeNetParams::initialize(std::uint64_t seed) {
  EdgeNetParams p;
  Rng rng(seed);
  for (auto* t : p.tensors()) {
    if (t->shape.size() == 1) continue;  // biases start at zero
    const std::size_t fan_in = t->shape.size() == 3 ? t->shape[0] * t->shape[1] : t->shape[0];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t->data) v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
  }
  return p;
}

// ---------------------------------------------------------------------------

SparseVoxelTensor voxelize(std::span<const Vec3> points, const Matrix& features, double voxel_size) {
  if (!(voxel_size > 0.0)) throw InputError("voxelize: voxel_size must be positive");
  if (static_cast<std::size_t>(features.rows()) != points.size()) throw ShapeError("voxelize: one feature row per point");
  SparseVoxelTensor out;
  out.voxel_size = voxel_size;
  out.point_to_site.resize(points.size());
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  lookup.reserve(points.size());
  constexpr double kLimit = static_cast<double>(1 << 20);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::array<std::int32_t, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double v = std::floor(points[i][a] / voxel_size);
      if (!(std::abs(v) < kLimit)) throw DataError("voxelize: coordinate outside the addressable grid");
      c[static_cast<std::size_t>(a)] = static_cast<std::int32_t>(v);
    }
    auto [it, inserted] = lookup.try_emplace(pack_site(c), static_cast<std::uint32_t>(out.sites.size()));
    if (inserted) out.sites.push_back(c);
    out.point_to_site[i] = it->second;
  }
  out.features = Matrix::Zero(static_cast<Eigen::Index>(out.sites.size()), features.cols());
  std::vector<double> count(out.sites.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.features.row(out.point_to_site[i]) += features.row(static_cast<Eigen::Index>(i));
    count[out.point_to_site[i]] += 1.0;
  }
  for (std::size_t s = 0; s < count.size(); ++s) out.features.row(static_cast<Eigen::Index>(s)) /= count[s];
  return out;
}

Rulebook build_rulebook(const std::vector<std::array<std::int32_t, 3>>& sites) {
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  lookup.reserve(sites.size());
  for (std::size_t s = 0; s < sites.size(); ++s) lookup.emplace(pack_site(sites[s]), static_cast<std::uint32_t>(s));
  Rulebook rules;
  for (std::size_t k = 0; k < kKernelVolume; ++k) {
    const auto off = kernel_offset(k);
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const std::array<std::int32_t, 3> q{sites[s][0] + off[0], sites[s][1] + off[1], sites[s][2] + off[2]};
      const auto it = lookup.find(pack_site(q));
      if (it != lookup.end()) rules.pairs[k].emplace_back(it->second, static_cast<std::uint32_t>(s));
    }
  }
  return rules;
}

Matrix sparse_conv(const Rulebook& rules, const Matrix& input, const Tensor& weight, const Tensor& bias) {
  return relu(sparse_conv_pre(rules, input, weight, bias));
}

SparseVoxelTensor sparse_conv_forward(const SparseVoxelTensor& tensor, const Tensor& weight, const Tensor& bias) {
  SparseVoxelTensor out;
  out.sites = tensor.sites;
  out.point_to_site = tensor.point_to_site;
  out.voxel_size = tensor.voxel_size;
  out.features = sparse_conv(build_rulebook(tensor.sites), tensor.features, weight, bias);
  return out;
}

Matrix cluster_avg_pool(const Matrix& site_features, std::span<const std::uint32_t> point_to_site,
                        std::span<const std::int32_t> point_cluster, std::size_t n_clusters) {
  if (point_to_site.size() != point_cluster.size()) throw ShapeError("cluster_avg_pool: misaligned point maps");
  Matrix pooled = Matrix::Zero(static_cast<Eigen::Index>(n_clusters), site_features.cols());
  std::vector<double> count(n_clusters, 0.0);
  for (std::size_t p = 0; p < point_cluster.size(); ++p) {
    const auto c = point_cluster[p];
    if (c < 0) continue;
    if (static_cast<std::size_t>(c) >= n_clusters) throw ShapeError("cluster_avg_pool: cluster id out of range");
    pooled.row(c) += site_features.row(point_to_site[p]);
    count[static_cast<std::size_t>(c)] += 1.0;
  }
  for (std::size_t c = 0; c < n_clusters; ++c) {
    if (count[c] > 0.0) pooled.row(static_cast<Eigen::Index>(c)) /= count[c];
  }
  return pooled;
}

Matrix sage_conv_forward(const Matrix& h, const Tensor& self_weight, const Tensor& neigh_weight, const Tensor& bias,
                         bool relu_activation) {
  Matrix out = sage_pre(h, self_weight, neigh_weight, bias);
  return relu_activation ? relu(std::move(out)) : out;
}

Matrix edge_mlp_forward(const Matrix& h, std::span<const std::pair<std::size_t, std::size_t>> edges,
                        const EdgeNetParams& params) {
  if (static_cast<std::size_t>(h.cols()) != kEmbeddingWidth) throw ShapeError("edge mlp: node features must be 32 wide");
  const auto w1 = as_matrix(params.mlp1_weight);
  const auto w2 = as_matrix(params.mlp2_weight);
  Matrix out(static_cast<Eigen::Index>(edges.size()), 2);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    if (i >= static_cast<std::size_t>(h.rows()) || j >= static_cast<std::size_t>(h.rows())) {
      throw InputError("edge mlp: edge endpoint out of range");
    }
    const Eigen::RowVectorXd z = (h.row(static_cast<Eigen::Index>(i)) * w1.topRows(kEmbeddingWidth) +
                                  h.row(static_cast<Eigen::Index>(j)) * w1.bottomRows(kEmbeddingWidth) +
                                  as_row(params.mlp1_bias))
                                     .cwiseMax(0.0);
    const Eigen::RowVectorXd logits = z * w2 + as_row(params.mlp2_bias);
    const double m = logits.maxCoeff();
    const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
    out(static_cast<Eigen::Index>(e), 0) = e0 / (e0 + e1);
    out(static_cast<Eigen::Index>(e), 1) = e1 / (e0 + e1);
  }
  return out;
}

// ---------------------------------------------------------------------------

EdgeNetInput prepare_input(const PointCloudFrame& frame, const ClassTable& classes, const ForegroundClusters& clusters,
                           const FeatureOptions& options, const Matrix* probabilities) {
  std::vector<Vec3> foreground(clusters.point_indices.size());
  for (std::size_t k = 0; k < foreground.size(); ++k) foreground[k] = frame.position(clusters.point_indices[k]);
  const auto normals = estimate_normals(foreground, options.normal_neighbors, options.sensor);

  std::vector<std::uint32_t> kept;
  std::vector<Vec3> kept_pos, kept_normals;
  EdgeNetInput input;
  for (std::size_t k = 0; k < foreground.size(); ++k) {
    if (clusters.assignment.labels[k] == ClusterAssignment::kNoise) continue;
    kept.push_back(clusters.point_indices[k]);
    kept_pos.push_back(foreground[k]);
    kept_normals.push_back(normals[k]);
    input.point_cluster.push_back(clusters.assignment.labels[k]);
  }

  Matrix one_hot;
  if (!probabilities) {
    one_hot = one_hot_probabilities(frame.semantic, classes.num_classes());
    probabilities = &one_hot;
  }
  const Matrix features =
      build_point_features(frame, kept, kept_normals, *probabilities, estimate_ground_height(frame));
  input.voxels = voxelize(kept_pos, features, options.voxel_size);
  input.rules = build_rulebook(input.voxels.sites);
  input.centroid = cluster_centroids(frame, clusters);
  return input;
}

Matrix forward(const EdgeNetInput& input, const EdgeNetParams& params, ForwardCache* cache) {
  const std::size_t n = input.num_clusters();
  if (n == 0) throw InputError("forward: at least one cluster is required");
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.conv1 = sparse_conv(input.rules, input.voxels.features, params.conv1_weight, params.conv1_bias);
  c.conv2 = sparse_conv(input.rules, c.conv1, params.conv2_weight, params.conv2_bias);
  const Matrix pooled = cluster_avg_pool(c.conv2, input.voxels.point_to_site, input.point_cluster, n);
  c.node_in.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNodeFeatureWidth));
  c.node_in.leftCols(kEmbeddingWidth) = pooled;
  c.node_in.rightCols(3) = input.centroid;
  c.sage1 = sage_conv_forward(c.node_in, params.sage1_self, params.sage1_neigh, params.sage1_bias, true);
  c.sage2 = sage_conv_forward(c.sage1, params.sage2_self, params.sage2_neigh, params.sage2_bias, false);
  EdgeHead head = edge_head(c.sage2, params);
  c.hidden = std::move(head.hidden);
  c.probs = std::move(head.probs);

  const auto ni = static_cast<Eigen::Index>(n);
  Matrix p_connect(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    for (Eigen::Index j = 0; j < ni; ++j) p_connect(i, j) = c.probs(i * ni + j, 1);
  return p_connect;
}

Matrix forward(const PointCloudFrame& frame, const ClassTable& classes, const ForegroundClusters& clusters,
               const EdgeNetParams& params, const FeatureOptions& options) {
  return forward(prepare_input(frame, classes, clusters, options), params);
}

namespace {

struct PairWeights {
  double positive = 1.0;
  double negative = 1.0;
  double total = 0.0;  // sum of weights over off-diagonal pairs
};

PairWeights pair_weights(const EdgeLabelMatrix& labels, const LossOptions& options) {
  const std::size_t n = labels.n;
  std::size_t pos = 0, all = n * n - n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && labels(i, j)) ++pos;
  const std::size_t neg = all - pos;
  PairWeights w;
  if (options.class_weights && pos > 0 && neg > 0) {
    w.positive = static_cast<double>(all) / (2.0 * static_cast<double>(pos));
    w.negative = static_cast<double>(all) / (2.0 * static_cast<double>(neg));
  }
  w.total = w.positive * static_cast<double>(pos) + w.negative * static_cast<double>(neg);
  return w;
}

double log_prob(double own, double other) {
  const double m = std::max(own, other);
  return own - (m + std::log(std::exp(own - m) + std::exp(other - m)));
}

}  // namespace

double loss_value(const EdgeNetInput& input, const EdgeLabelMatrix& labels, const EdgeNetParams& params,
                  const LossOptions& options) {
  const std::size_t n = input.num_clusters();
  if (labels.n != n) throw ShapeError("loss: label matrix does not match the cluster count");
  if (n < 2) return 0.0;
  ForwardCache cache;
  forward(input, params, &cache);
  const Matrix logits = [&] {
    Matrix l = cache.hidden * as_matrix(params.mlp2_weight);
    l.rowwise() += as_row(params.mlp2_bias);
    return l;
  }();
  const PairWeights w = pair_weights(labels, options);
  double total = 0.0;
  const auto ni = static_cast<Eigen::Index>(n);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) {
      if (i == j) continue;
      const bool y = labels(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) != 0;
      const Eigen::Index r = i * ni + j;
      const double lp = y ? log_prob(logits(r, 1), logits(r, 0)) : log_prob(logits(r, 0), logits(r, 1));
      total -= (y ? w.positive : w.negative) * lp;
    }
  }
  return total / w.total;
}

LossResult loss_and_grad(const EdgeNetInput& input, const EdgeLabelMatrix& labels, const EdgeNetParams& params,
                         const LossOptions& options) {
  const std::size_t n = input.num_clusters();
  if (labels.n != n) throw ShapeError("loss: label matrix does not match the cluster count");
  LossResult result;
  result.grads.set_zero();
  if (n == 0) return result;
  ForwardCache c;
  result.p_connect = forward(input, params, &c);
  if (n < 2) return result;

  const auto ni = static_cast<Eigen::Index>(n);
  const PairWeights w = pair_weights(labels, options);
  Matrix logits = c.hidden * as_matrix(params.mlp2_weight);
  logits.rowwise() += as_row(params.mlp2_bias);

  // Softmax cross-entropy: d loss / d logits = weight * (p - onehot) / total weight.
  Matrix grad_logits = Matrix::Zero(ni * ni, 2);
  double total = 0.0;
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) {
      if (i == j) continue;
      const bool y = labels(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) != 0;
      const Eigen::Index r = i * ni + j;
      const double wy = (y ? w.positive : w.negative) / w.total;
      total -= (y ? w.positive : w.negative) *
               (y ? log_prob(logits(r, 1), logits(r, 0)) : log_prob(logits(r, 0), logits(r, 1)));
      grad_logits(r, 0) = wy * (c.probs(r, 0) - (y ? 0.0 : 1.0));
      grad_logits(r, 1) = wy * (c.probs(r, 1) - (y ? 1.0 : 0.0));
    }
  }
  result.loss = total / w.total;
  EdgeNetParams& g = result.grads;

  // Edge MLP.
  as_matrix(g.mlp2_weight).noalias() += c.hidden.transpose() * grad_logits;
  as_row(g.mlp2_bias) += grad_logits.colwise().sum();
  const Matrix grad_hidden = relu_backward(grad_logits * as_matrix(params.mlp2_weight).transpose(), c.hidden);
  Matrix from_sum = Matrix::Zero(ni, static_cast<Eigen::Index>(kMlpHiddenWidth));
  Matrix to_sum = Matrix::Zero(ni, static_cast<Eigen::Index>(kMlpHiddenWidth));
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) {
      from_sum.row(i) += grad_hidden.row(i * ni + j);
      to_sum.row(j) += grad_hidden.row(i * ni + j);
    }
  }
  auto g1 = as_matrix(g.mlp1_weight);
  g1.topRows(kEmbeddingWidth).noalias() += c.sage2.transpose() * from_sum;
  g1.bottomRows(kEmbeddingWidth).noalias() += c.sage2.transpose() * to_sum;
  as_row(g.mlp1_bias) += from_sum.colwise().sum();
  const auto w1 = as_matrix(params.mlp1_weight);
  const Matrix grad_sage2 =
      from_sum * w1.topRows(kEmbeddingWidth).transpose() + to_sum * w1.bottomRows(kEmbeddingWidth).transpose();

  // Graph convolutions.
  const Matrix grad_sage1 =
      sage_backward(c.sage1, grad_sage2, params.sage2_self, params.sage2_neigh, g.sage2_self, g.sage2_neigh, g.sage2_bias);
  const Matrix grad_node_in = sage_backward(c.node_in, relu_backward(grad_sage1, c.sage1), params.sage1_self,
                                            params.sage1_neigh, g.sage1_self, g.sage1_neigh, g.sage1_bias);

  // Pooling: each point hands 1/|cluster| of its node's gradient to its site.
  std::vector<double> count(n, 0.0);
  for (auto cl : input.point_cluster)
    if (cl >= 0) count[static_cast<std::size_t>(cl)] += 1.0;
  Matrix grad_conv2 = Matrix::Zero(c.conv2.rows(), c.conv2.cols());
  for (std::size_t p = 0; p < input.point_cluster.size(); ++p) {
    const auto cl = input.point_cluster[p];
    if (cl < 0) continue;
    grad_conv2.row(input.voxels.point_to_site[p]) +=
        grad_node_in.row(cl).leftCols(kEmbeddingWidth) / count[static_cast<std::size_t>(cl)];
  }

  // Sparse convolutions.
  const Matrix grad_conv1 = sparse_conv_backward(input.rules, c.conv1, relu_backward(grad_conv2, c.conv2),
                                                 params.conv2_weight, g.conv2_weight, g.conv2_bias, true);
  sparse_conv_backward(input.rules, input.voxels.features, relu_backward(grad_conv1, c.conv1), params.conv1_weight,
                       g.conv1_weight, g.conv1_bias, false);
  return result;
}

}  // namespace panograph
