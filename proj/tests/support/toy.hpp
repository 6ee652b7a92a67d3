#pragma once

#include "panograph/clustering.hpp"
#include "panograph/edgenet.hpp"
#include "panograph/graph_builder.hpp"
#include "panograph/rng.hpp"
#include "panograph/scene_io.hpp"

namespace toy {

using namespace panograph;

// Vertical patch of points on a regular grid with a little jitter.
inline void add_patch(PointCloudFrame& f, Rng& rng, double x0, double y0, double z0, int nu, int nv, double step,
                      std::uint16_t cls, std::uint16_t inst) {
  for (int u = 0; u < nu; ++u) {
    for (int v = 0; v < nv; ++v) {
      f.points.push_back({static_cast<float>(x0 + rng.normal(0, 0.005)), static_cast<float>(y0 + u * step),
                          static_cast<float>(z0 + v * step), static_cast<float>(rng.uniform(0.2, 0.8))});
      f.semantic.push_back(cls);
      f.instance.push_back(inst);
    }
  }
}

// Three clusters: a car split into two patches by a gap, and a pedestrian.
// Includes a few road points so the ground estimate is meaningful. `side`
// is the number of grid points along each patch edge (at least 2).
inline PointCloudFrame three_cluster_frame(std::uint64_t seed = 1, int side = 4) {
  Rng rng(seed);
  PointCloudFrame f;
  add_patch(f, rng, 1.5, -0.6, -0.4, side, side, 0.08, synthetic_class::car, 1);
  add_patch(f, rng, 1.5, 0.3, -0.4, side, side, 0.08, synthetic_class::car, 1);
  add_patch(f, rng, 1.2, 1.2, -0.6, side, side + 2, 0.08, synthetic_class::pedestrian, 2);
  for (int i = 0; i < 20; ++i) {
    f.points.push_back({static_cast<float>(rng.uniform(0, 3)), static_cast<float>(rng.uniform(-2, 2)), -0.8f, 0.1f});
    f.semantic.push_back(synthetic_class::road);
    f.instance.push_back(0);
  }
  return f;
}

inline OversegmentParams toy_clustering() {
  OversegmentParams p;
  p.method = ClusterMethod::dbscan;
  p.dbscan_eps = 0.2;
  p.dbscan_min_pts = 3;
  return p;
}

struct ToyProblem {
  PointCloudFrame frame;
  ForegroundClusters clusters;
  EdgeNetInput input;
  EdgeLabelMatrix labels;
};

inline ToyProblem three_cluster_problem(std::uint64_t seed = 1, int side = 4) {
  ToyProblem t;
  t.frame = three_cluster_frame(seed, side);
  const ClassTable classes = synthetic_class_table();
  t.clusters = oversegment_foreground(t.frame, classes, toy_clustering());
  t.input = prepare_input(t.frame, classes, t.clusters, FeatureOptions{});
  t.labels = associate_clusters(t.frame, t.clusters);
  return t;
}

}  // namespace toy
