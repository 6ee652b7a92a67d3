#pragma once

#include "panograph/panoptic_fusion.hpp"
#include "panograph/scene_io.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace panograph {

struct EvalOptions {
  // Points whose ground-truth class is this id are dropped from both sides.
  std::optional<std::uint16_t> ignore_class = 0;
  // Stuff segments smaller than this are discarded (0 keeps all).
  std::size_t min_stuff_points = 0;
};

struct Segment {
  std::uint16_t cls = 0;
  std::uint16_t instance = 0;  // 0 for stuff segments
  std::vector<std::uint32_t> points;  // ascending frame point indices
};

// Thing segments are keyed by (class, instance id > 0), one segment per stuff
// class. Thing points with instance 0 are collected per class in `unassigned`
// and take no part in matching. Segments are ordered by (class, instance).
struct FrameSegments {
  std::vector<Segment> segments;
  std::vector<Segment> unassigned;
  std::size_t ignored_points = 0;
};

// `keep` marks the points that survive ignore filtering (empty = all).
FrameSegments segment_frame(const PanopticFrame& frame, const ClassTable& classes,
                            const std::vector<std::uint8_t>& keep = {}, std::size_t min_stuff_points = 0);

struct TruePositive {
  std::size_t pred = 0;  // index into pred segments
  std::size_t gt = 0;    // index into gt segments
  double iou = 0.0;
};

struct ClassMatch {
  std::vector<TruePositive> tp;
  std::vector<std::size_t> fp;  // unmatched pred segments
  std::vector<std::size_t> fn;  // unmatched gt segments
};

struct SegmentMatch {
  std::vector<ClassMatch> per_class;  // indexed by class id
};

// Same-class pairs with IoU > 0.5 are true positives; such a pair is unique
// for each segment, so the result does not depend on iteration order.
SegmentMatch match_segments(const std::vector<Segment>& pred, const std::vector<Segment>& gt, std::size_t num_classes);

struct ClassQuality {
  std::uint16_t id = 0;
  std::string name;
  bool thing = false;
  std::size_t tp = 0, fp = 0, fn = 0;
  std::optional<double> pq, sq, rq, iou;  // nullopt: undefined
};

struct PQReport {
  std::vector<ClassQuality> classes;
  std::optional<double> pq, pq_dagger, sq, rq;
  std::optional<double> pq_th, sq_th, rq_th;
  std::optional<double> pq_st, sq_st, rq_st;
  std::optional<double> miou;
  std::size_t frames = 0;
};

struct MiouResult {
  std::vector<std::optional<double>> per_class;  // indexed by class id
  std::optional<double> mean;
};

// Confusion-matrix IoU; classes absent from both sides are left out of the mean.
MiouResult compute_miou(const std::vector<std::uint16_t>& pred, const std::vector<std::uint16_t>& gt,
                        std::size_t num_classes, std::optional<std::uint16_t> ignore_class = std::nullopt);

// Accumulates per-class matching statistics and a semantic confusion matrix
// over frames. The report is independent of frame order.
class PanopticEvaluator {
 public:
  PanopticEvaluator(ClassTable classes, EvalOptions options = {});

  void add_frame(const PanopticFrame& pred, const PanopticFrame& gt);
  PQReport report() const;

  const ClassTable& classes() const { return classes_; }

 private:
  ClassTable classes_;
  EvalOptions options_;
  std::vector<std::vector<double>> tp_iou_;  // per class, summed after sorting
  std::vector<std::size_t> fp_, fn_;
  std::vector<std::uint64_t> confusion_;     // gt-major, num_classes^2
  std::size_t frames_ = 0;
};

// Convenience for a list of frame pairs.
PQReport compute_pq(const std::vector<PanopticFrame>& pred, const std::vector<PanopticFrame>& gt,
                    const ClassTable& classes, const EvalOptions& options = {});

nlohmann::json report_to_json(const PQReport& report);

// Fixed-width table with columns PQ, PQ†, RQ, SQ, the thing/stuff splits and
// mIoU in percent with one decimal. Undefined values print as "-".
std::string report_table(const std::vector<std::pair<std::string, PQReport>>& rows);

}  // namespace panograph
