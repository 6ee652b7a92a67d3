#pragma once

#include "panograph/clustering.hpp"
#include "panograph/common.hpp"
#include "panograph/scene_io.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace panograph {

// N x N symmetric, reflexive, row-major.
struct AdjacencyMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  bool operator==(const AdjacencyMatrix&) const = default;
};

// A[i][j] = (p(i,j) + p(j,i)) / 2 > tau, diagonal forced true.
AdjacencyMatrix binarize(const Matrix& p_connect, double tau);

// Node -> instance id, ids contiguous from 1 in order of each component's
// smallest node.
std::vector<std::uint32_t> connected_components(const AdjacencyMatrix& adjacency);

// Per-point instance ids for the whole frame: clustered foreground points get
// their node's instance id; noise, stuff and unclustered points get 0.
// Throws DataError if an id does not fit the 16-bit label field.
std::vector<std::uint16_t> project_instances(const PointCloudFrame& frame, const ForegroundClusters& clusters,
                                             const std::vector<std::uint32_t>& partition);

// Every point of an instance (id > 0) takes the instance's modal class; ties
// go to the smallest class id. Points with id 0 are left untouched.
std::vector<std::uint16_t> majority_vote_refine(const std::vector<std::uint16_t>& semantic,
                                                const std::vector<std::uint16_t>& instance);

nlohmann::json adjacency_to_json(const AdjacencyMatrix& adjacency);

}  // namespace panograph
