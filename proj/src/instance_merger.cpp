#include "panograph/instance_merger.hpp"

#include <nlohmann/json.hpp>

#include <limits>
#include <map>

namespace panograph {

AdjacencyMatrix binarize(const Matrix& p_connect, double tau) {
  if (p_connect.rows() != p_connect.cols()) throw ShapeError("binarize: probability matrix must be square");
  const auto n = static_cast<std::size_t>(p_connect.rows());
  AdjacencyMatrix a;
  a.n = n;
  a.values.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      a.values[i * n + j] = i == j || (p_connect(ii, jj) + p_connect(jj, ii)) / 2.0 > tau;
    }
  }
  return a;
}

std::vector<std::uint32_t> connected_components(const AdjacencyMatrix& adjacency) {
  const std::size_t n = adjacency.n;
  std::vector<std::uint32_t> id(n, 0);
  std::uint32_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (id[start] != 0) continue;
    id[start] = ++next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (id[v] == 0 && (adjacency(u, v) || adjacency(v, u))) {
          id[v] = next;
          stack.push_back(v);
        }
      }
    }
  }
  return id;
}

std::vector<std::uint16_t> project_instances(const PointCloudFrame& frame, const ForegroundClusters& clusters,
                                             const std::vector<std::uint32_t>& partition) {
  if (partition.size() != static_cast<std::size_t>(clusters.assignment.n_clusters)) {
    throw ShapeError("project_instances: partition must cover every cluster");
  }
  std::vector<std::uint16_t> out(frame.size(), 0);
  for (std::size_t k = 0; k < clusters.point_indices.size(); ++k) {
    const auto c = clusters.assignment.labels[k];
    if (c == ClusterAssignment::kNoise) continue;
    const std::uint32_t inst = partition[static_cast<std::size_t>(c)];
    if (inst > std::numeric_limits<std::uint16_t>::max()) throw DataError("instance id exceeds the 16-bit label field");
    out[clusters.point_indices[k]] = static_cast<std::uint16_t>(inst);
  }
  return out;
}

std::vector<std::uint16_t> majority_vote_refine(const std::vector<std::uint16_t>& semantic,
                                                const std::vector<std::uint16_t>& instance) {
  if (semantic.size() != instance.size()) throw ShapeError("majority_vote_refine: arrays differ in length");
  std::map<std::uint16_t, std::map<std::uint16_t, std::size_t>> votes;
  for (std::size_t i = 0; i < semantic.size(); ++i) {
    if (instance[i] != 0) ++votes[instance[i]][semantic[i]];
  }
  std::map<std::uint16_t, std::uint16_t> winner;
  for (const auto& [inst, counts] : votes) {
    std::uint16_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [cls, count] : counts) {  // ascending class id: strict > keeps the smallest on ties
      if (count > best_count) {
        best = cls;
        best_count = count;
      }
    }
    winner[inst] = best;
  }
  std::vector<std::uint16_t> out = semantic;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (instance[i] != 0) out[i] = winner[instance[i]];
  }
  return out;
}

nlohmann::json adjacency_to_json(const AdjacencyMatrix& adjacency) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < adjacency.n; ++i) {
    std::vector<int> row(adjacency.n);
    for (std::size_t j = 0; j < adjacency.n; ++j) row[j] = adjacency(i, j);
    rows.push_back(row);
  }
  return {{"num_nodes", adjacency.n}, {"adjacency", rows}};
}

}  // namespace panograph
