#include "panograph/panoptic_fusion.hpp"

#include "panograph/neighbor_index.hpp"

#include <map>

namespace panograph {

namespace {

void assign_nearest(const PointCloudFrame& positions, const ClassTable& classes, PanopticFrame& frame,
                    FusionDiagnostics& diagnostics) {
  // One index per thing class over its instanced points.
  std::map<std::uint16_t, std::vector<std::uint32_t>> donors, orphans;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto cls = frame.semantic[i];
    if (!classes.is_thing(cls)) continue;
    (frame.instance[i] != 0 ? donors : orphans)[cls].push_back(static_cast<std::uint32_t>(i));
  }
  for (const auto& [cls, lost] : orphans) {
    const auto it = donors.find(cls);
    if (it == donors.end()) continue;
    std::vector<Vec3> pts;
    pts.reserve(it->second.size());
    for (auto i : it->second) pts.push_back(positions.position(i));
    const NeighborIndex index = build_index(pts);
    for (auto i : lost) {
      const auto nb = index.knn(positions.position(i), 1);
      frame.instance[i] = frame.instance[it->second[nb.front().index]];
      ++diagnostics.noise_points_assigned;
    }
  }
}

}  // namespace

FusionResult fuse(const std::vector<std::uint16_t>& semantic, const std::vector<std::uint16_t>& instance,
                  const ClassTable& classes, const FusionOptions& options, const PointCloudFrame* positions) {
  if (semantic.size() != instance.size()) throw ShapeError("fuse: semantic and instance arrays differ in length");
  FusionResult r;
  r.frame.semantic = semantic;
  r.frame.instance = instance;
  for (std::size_t i = 0; i < semantic.size(); ++i) {
    if (instance[i] != 0 && !classes.is_thing(semantic[i])) {
      r.frame.instance[i] = 0;
      ++r.diagnostics.stuff_instances_cleared;
    }
  }
  if (options.assign_noise_to_nearest) {
    if (!positions || positions->size() != semantic.size()) {
      throw InputError("fuse: nearest-instance assignment needs the frame's point positions");
    }
    assign_nearest(*positions, classes, r.frame, r.diagnostics);
  }
  return r;
}

std::pair<std::vector<std::uint16_t>, std::vector<std::uint16_t>> split(const PanopticFrame& frame) {
  return {frame.semantic, frame.instance};
}

PanopticFrame panoptic_from_frame(const PointCloudFrame& frame) { return {frame.semantic, frame.instance}; }

}  // namespace panograph
