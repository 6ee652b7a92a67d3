#include "panograph/pipeline.hpp"

#include <numeric>

namespace panograph {

namespace {

PanopticFrame finish(const PointCloudFrame& frame, const ClassTable& classes, const ForegroundClusters& clusters,
                     const std::vector<std::uint32_t>& partition, const FusionOptions& fusion,
                     FusionDiagnostics* diagnostics) {
  const auto instance = project_instances(frame, clusters, partition);
  const auto semantic = majority_vote_refine(frame.semantic, instance);
  FusionResult fused = fuse(semantic, instance, classes, fusion, &frame);
  if (diagnostics) *diagnostics = fused.diagnostics;
  return std::move(fused.frame);
}

}  // namespace

FrameResult infer_frame(const PointCloudFrame& frame, const ClassTable& classes, const EdgeNetParams& params,
                        const PipelineOptions& options) {
  FrameResult r;
  r.clusters = oversegment_foreground(frame, classes, options.cluster);
  const auto n = static_cast<std::size_t>(r.clusters.assignment.n_clusters);
  if (n == 0) {
    r.p_connect = Matrix(0, 0);
  } else {
    r.p_connect = forward(prepare_input(frame, classes, r.clusters, options.features), params);
  }
  r.adjacency = binarize(r.p_connect, options.tau);
  r.partition = connected_components(r.adjacency);
  r.panoptic = finish(frame, classes, r.clusters, r.partition, options.fusion, &r.diagnostics);
  return r;
}

PanopticFrame clusters_as_instances(const PointCloudFrame& frame, const ClassTable& classes,
                                    const ForegroundClusters& clusters, const FusionOptions& fusion) {
  std::vector<std::uint32_t> partition(static_cast<std::size_t>(clusters.assignment.n_clusters));
  std::iota(partition.begin(), partition.end(), 1u);
  return finish(frame, classes, clusters, partition, fusion, nullptr);
}

TrainSample make_train_sample(const PointCloudFrame& frame, const ClassTable& classes, const PipelineOptions& options,
                              std::string name) {
  TrainSample s;
  s.name = std::move(name);
  const ForegroundClusters clusters = oversegment_foreground(frame, classes, options.cluster);
  s.input = prepare_input(frame, classes, clusters, options.features);
  s.labels = associate_clusters(frame, clusters);
  return s;
}

}  // namespace panograph
