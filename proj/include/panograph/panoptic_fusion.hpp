#pragma once

#include "panograph/scene_io.hpp"

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace panograph {

struct PanopticFrame {
  std::vector<std::uint16_t> semantic;
  std::vector<std::uint16_t> instance;

  std::size_t size() const { return semantic.size(); }
  bool operator==(const PanopticFrame&) const = default;
};

struct FusionDiagnostics {
  std::size_t stuff_instances_cleared = 0;  // stuff points whose nonzero id was reset
  std::size_t noise_points_assigned = 0;    // thing points given the nearest instance
};

struct FusionOptions {
  // Give unassigned thing points the instance of the nearest instanced point
  // of the same class (needs point positions).
  bool assign_noise_to_nearest = false;
};

struct FusionResult {
  PanopticFrame frame;
  FusionDiagnostics diagnostics;
};

// Zips semantics and instance ids, forcing stuff instances to 0.
// `positions` is only used when assign_noise_to_nearest is set.
FusionResult fuse(const std::vector<std::uint16_t>& semantic, const std::vector<std::uint16_t>& instance,
                  const ClassTable& classes, const FusionOptions& options = {},
                  const PointCloudFrame* positions = nullptr);

std::pair<std::vector<std::uint16_t>, std::vector<std::uint16_t>> split(const PanopticFrame& frame);

PanopticFrame panoptic_from_frame(const PointCloudFrame& frame);

}  // namespace panograph
