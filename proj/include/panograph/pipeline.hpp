#pragma once

#include "panograph/clustering.hpp"
#include "panograph/edgenet.hpp"
#include "panograph/instance_merger.hpp"
#include "panograph/panoptic_fusion.hpp"
#include "panograph/scene_io.hpp"
#include "panograph/trainer.hpp"

#include <string>

namespace panograph {

struct PipelineOptions {
  OversegmentParams cluster;
  FeatureOptions features;
  double tau = 0.5;
  FusionOptions fusion;
};

struct FrameResult {
  PanopticFrame panoptic;
  ForegroundClusters clusters;
  Matrix p_connect;  // N x N
  AdjacencyMatrix adjacency;
  std::vector<std::uint32_t> partition;
  FusionDiagnostics diagnostics;
};

// Full inference on one frame, using frame.semantic as the semantic source:
// over-segment things, score cluster pairs, merge, refine and fuse.
FrameResult infer_frame(const PointCloudFrame& frame, const ClassTable& classes, const EdgeNetParams& params,
                        const PipelineOptions& options);

// Baseline: every cluster becomes its own instance.
PanopticFrame clusters_as_instances(const PointCloudFrame& frame, const ClassTable& classes,
                                    const ForegroundClusters& clusters, const FusionOptions& fusion = {});

// Over-segments a ground-truth frame and derives its edge labels.
TrainSample make_train_sample(const PointCloudFrame& frame, const ClassTable& classes, const PipelineOptions& options,
                              std::string name = {});

}  // namespace panograph
