#include "panograph/clustering.hpp"

#include "panograph/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace panograph {

void ClusterAssignment::compact() {
  std::unordered_map<std::int32_t, std::int32_t> remap;
  std::int32_t next = 0;
  for (auto& l : labels) {
    if (l == kNoise) continue;
    auto [it, inserted] = remap.try_emplace(l, next);
    if (inserted) ++next;
    l = it->second;
  }
  n_clusters = next;
}

std::vector<std::uint32_t> ClusterAssignment::cluster_sizes() const {
  std::vector<std::uint32_t> sizes(static_cast<std::size_t>(std::max(n_clusters, 0)), 0);
  for (auto l : labels)
    if (l != kNoise) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

// ---------------------------------------------------------------------------

ClusterAssignment dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw InputError("dbscan: eps must be positive");
  if (min_pts < 1) throw InputError("dbscan: min_pts must be >= 1");

  constexpr std::int32_t kUnvisited = -2;
  ClusterAssignment out;
  out.labels.assign(points.size(), kUnvisited);
  const NeighborIndex index = build_index(points);

  std::int32_t cluster = 0;
  std::deque<std::uint32_t> queue;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (out.labels[i] != kUnvisited) continue;
    auto seeds = index.radius_query(points[i], eps);
    if (seeds.size() < min_pts) {
      out.labels[i] = ClusterAssignment::kNoise;
      continue;
    }
    out.labels[i] = cluster;
    queue.assign(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::uint32_t q = queue.front();
      queue.pop_front();
      if (out.labels[q] == ClusterAssignment::kNoise) {
        out.labels[q] = cluster;  // border point, already known to be non-core
        continue;
      }
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = cluster;
      const auto neighbors = index.radius_query(points[q], eps);
      if (neighbors.size() >= min_pts) queue.insert(queue.end(), neighbors.begin(), neighbors.end());
    }
    ++cluster;
  }
  out.compact();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct CondensedEntry {
  std::int64_t parent;
  std::int64_t child;
  double lambda;
  std::int64_t child_size;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::size_t& parent(std::size_t x) { return parent_[x]; }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

ClusterAssignment hdbscan(std::span<const Vec3> points, std::size_t min_cluster_size, std::size_t min_samples) {
  if (min_cluster_size < 2) throw InputError("hdbscan: min_cluster_size must be >= 2");
  if (min_samples < 1) throw InputError("hdbscan: min_samples must be >= 1");
  const std::size_t n = points.size();
  ClusterAssignment out;
  out.labels.assign(n, ClusterAssignment::kNoise);
  if (n < min_cluster_size || n < 2) return out;

  // Core distances.
  const NeighborIndex index = build_index(points);
  const std::size_t k = std::min(min_samples, n);
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = std::sqrt(index.knn(points[i], k).back().squared_distance);

  // Prim's algorithm on the dense mutual-reachability graph.
  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> mst;
  mst.reserve(n - 1);
  {
    std::vector<char> in_tree(n, 0);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::size_t current = 0;
    in_tree[0] = 1;
    for (std::size_t step = 1; step < n; ++step) {
      std::size_t next = n;
      double next_w = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (in_tree[j]) continue;
        const double d = std::sqrt(squared_distance(points[current], points[j]));
        const double mr = std::max({d, core[current], core[j]});
        if (mr < best[j]) {
          best[j] = mr;
          from[j] = current;
        }
        if (best[j] < next_w || next == n) {
          next_w = best[j];
          next = j;
        }
      }
      mst.push_back({from[next], next, next_w});
      in_tree[next] = 1;
      current = next;
    }
  }
  std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  // Single-linkage hierarchy: node n+i is the i-th merge.
  const std::size_t n_nodes = 2 * n - 1;
  std::vector<std::size_t> left(n - 1), right(n - 1), node_size(n_nodes, 1);
  std::vector<double> merge_dist(n - 1);
  {
    UnionFind uf(n_nodes);
    for (std::size_t i = 0; i < mst.size(); ++i) {
      const std::size_t ra = uf.find(mst[i].a), rb = uf.find(mst[i].b);
      left[i] = ra;
      right[i] = rb;
      merge_dist[i] = mst[i].w;
      node_size[n + i] = node_size[ra] + node_size[rb];
      uf.parent(ra) = n + i;
      uf.parent(rb) = n + i;
    }
  }

  double max_finite_lambda = 0.0;
  for (double d : merge_dist)
    if (d > 0.0) max_finite_lambda = std::max(max_finite_lambda, 1.0 / d);
  const double zero_lambda = max_finite_lambda > 0.0 ? 2.0 * max_finite_lambda : 1.0;
  const auto lambda_of = [&](double d) { return d > 0.0 ? 1.0 / d : zero_lambda; };

  // Condense.
  const auto leaves_under = [&](std::size_t node, std::vector<std::size_t>& acc) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        acc.push_back(x);
      } else {
        stack.push_back(right[x - n]);
        stack.push_back(left[x - n]);
      }
    }
  };

  const std::size_t root = n_nodes - 1;
  std::vector<std::int64_t> relabel(n_nodes, -1);
  relabel[root] = static_cast<std::int64_t>(n);
  std::int64_t next_label = static_cast<std::int64_t>(n) + 1;
  std::vector<CondensedEntry> tree;
  std::deque<std::size_t> bfs{root};
  std::vector<std::size_t> leaves;
  while (!bfs.empty()) {
    const std::size_t node = bfs.front();
    bfs.pop_front();
    if (node < n) continue;
    const std::size_t l = left[node - n], r = right[node - n];
    const double lambda = lambda_of(merge_dist[node - n]);
    const auto ls = static_cast<std::int64_t>(node_size[l]);
    const auto rs = static_cast<std::int64_t>(node_size[r]);
    const auto mcs = static_cast<std::int64_t>(min_cluster_size);
    const std::int64_t me = relabel[node];
    const auto drop = [&](std::size_t sub) {
      leaves.clear();
      leaves_under(sub, leaves);
      for (std::size_t leaf : leaves) tree.push_back({me, static_cast<std::int64_t>(leaf), lambda, 1});
    };
    if (ls >= mcs && rs >= mcs) {
      relabel[l] = next_label++;
      tree.push_back({me, relabel[l], lambda, ls});
      relabel[r] = next_label++;
      tree.push_back({me, relabel[r], lambda, rs});
      bfs.push_back(l);
      bfs.push_back(r);
    } else if (ls < mcs && rs < mcs) {
      drop(l);
      drop(r);
    } else if (ls < mcs) {
      relabel[r] = me;
      drop(l);
      bfs.push_back(r);
    } else {
      relabel[l] = me;
      drop(r);
      bfs.push_back(l);
    }
  }

  // Stability and excess-of-mass selection.
  const auto root_label = static_cast<std::int64_t>(n);
  const std::size_t n_clusters = static_cast<std::size_t>(next_label - root_label);
  const auto cidx = [&](std::int64_t label) { return static_cast<std::size_t>(label - root_label); };
  std::vector<double> birth(n_clusters, 0.0), stability(n_clusters, 0.0);
  std::vector<std::vector<std::int64_t>> children(n_clusters);
  for (const auto& e : tree) {
    if (e.child_size > 1) {
      birth[cidx(e.child)] = e.lambda;
      children[cidx(e.parent)].push_back(e.child);
    }
  }
  for (const auto& e : tree) {
    stability[cidx(e.parent)] += (e.lambda - birth[cidx(e.parent)]) * static_cast<double>(e.child_size);
  }
  std::vector<char> selected(n_clusters, 1);
  selected[0] = 0;
  for (std::size_t c = n_clusters; c-- > 1;) {
    double subtree = 0.0;
    for (auto ch : children[c]) subtree += stability[cidx(ch)];
    if (subtree > stability[c]) {
      selected[c] = 0;
      stability[c] = subtree;
    } else {
      std::vector<std::int64_t> stack(children[c].begin(), children[c].end());
      while (!stack.empty()) {
        const auto x = stack.back();
        stack.pop_back();
        selected[cidx(x)] = 0;
        for (auto ch : children[cidx(x)]) stack.push_back(ch);
      }
    }
  }

  // Label each point with the selected cluster it descends from.
  std::vector<std::int64_t> up(static_cast<std::size_t>(next_label), -1);
  for (const auto& e : tree) up[static_cast<std::size_t>(e.child)] = e.parent;
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t c = up[i];
    while (c >= root_label && !selected[cidx(c)]) c = up[static_cast<std::size_t>(c)];
    if (c >= root_label) out.labels[i] = static_cast<std::int32_t>(cidx(c));
  }
  out.compact();
  return out;
}

// ---------------------------------------------------------------------------

ClusterAssignment meanshift(std::span<const Vec3> points, double bandwidth, std::size_t max_iterations) {
  if (!(bandwidth > 0.0)) throw InputError("meanshift: bandwidth must be positive");
  const std::size_t n = points.size();
  ClusterAssignment out;
  out.labels.assign(n, ClusterAssignment::kNoise);
  if (n == 0) return out;

  const NeighborIndex index = build_index(points);
  const double tolerance = 1e-3 * bandwidth;
  std::vector<Vec3> ends(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 x = points[i];
    for (std::size_t it = 0; it < max_iterations; ++it) {
      const auto nb = index.radius_query(x, bandwidth);
      if (nb.empty()) break;
      Vec3 mean = Vec3::Zero();
      for (auto j : nb) mean += points[j];
      mean /= static_cast<double>(nb.size());
      const double shift = (mean - x).norm();
      x = mean;
      if (shift < tolerance) break;
    }
    ends[i] = x;
  }

  std::vector<std::size_t> support(n);
  for (std::size_t i = 0; i < n; ++i) support[i] = index.radius_query(ends[i], bandwidth).size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] > support[b]; });

  std::vector<Vec3> modes;
  const double merge2 = 0.25 * bandwidth * bandwidth;
  for (std::size_t i : order) {
    bool near_kept = false;
    for (const auto& m : modes) {
      if (squared_distance(m, ends[i]) <= merge2) {
        near_kept = true;
        break;
      }
    }
    if (!near_kept) modes.push_back(ends[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double d = squared_distance(modes[m], ends[i]);
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    out.labels[i] = static_cast<std::int32_t>(best);
  }
  out.compact();
  return out;
}

// ---------------------------------------------------------------------------

ClusterMethod parse_cluster_method(const std::string& name) {
  if (name == "hdbscan") return ClusterMethod::hdbscan;
  if (name == "dbscan") return ClusterMethod::dbscan;
  if (name == "meanshift") return ClusterMethod::meanshift;
  throw ConfigError("unknown clustering method '" + name + "'");
}

std::string to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::hdbscan: return "hdbscan";
    case ClusterMethod::dbscan: return "dbscan";
    case ClusterMethod::meanshift: return "meanshift";
  }
  return "?";
}

ClusterAssignment cluster_points(std::span<const Vec3> points, const OversegmentParams& params) {
  switch (params.method) {
    case ClusterMethod::hdbscan: return hdbscan(points, params.min_cluster_size, params.min_samples);
    case ClusterMethod::dbscan: return dbscan(points, params.dbscan_eps, params.dbscan_min_pts);
    case ClusterMethod::meanshift: return meanshift(points, params.meanshift_bandwidth);
  }
  throw ConfigError("unknown clustering method");
}

ForegroundClusters oversegment_foreground(const PointCloudFrame& frame, const ClassTable& classes,
                                          const OversegmentParams& params) {
  ForegroundClusters out;
  std::vector<std::vector<std::uint32_t>> groups;
  if (params.per_class) {
    for (auto cls : classes.thing_ids()) {
      std::vector<std::uint32_t> members;
      for (std::size_t i = 0; i < frame.size(); ++i)
        if (frame.semantic[i] == cls) members.push_back(static_cast<std::uint32_t>(i));
      if (!members.empty()) groups.push_back(std::move(members));
    }
  } else {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < frame.size(); ++i)
      if (classes.is_thing(frame.semantic[i])) members.push_back(static_cast<std::uint32_t>(i));
    if (!members.empty()) groups.push_back(std::move(members));
  }

  std::int32_t offset = 0;
  for (const auto& members : groups) {
    std::vector<Vec3> pts;
    pts.reserve(members.size());
    for (auto i : members) pts.push_back(frame.position(i));
    const ClusterAssignment local = cluster_points(pts, params);
    for (std::size_t k = 0; k < members.size(); ++k) {
      out.point_indices.push_back(members[k]);
      out.assignment.labels.push_back(local.labels[k] == ClusterAssignment::kNoise ? ClusterAssignment::kNoise
                                                                                   : local.labels[k] + offset);
    }
    offset += local.n_clusters;
  }
  out.assignment.n_clusters = offset;
  return out;
}

}  // namespace panograph
