#include "panograph/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace panograph {

FrameSegments segment_frame(const PanopticFrame& frame, const ClassTable& classes, const std::vector<std::uint8_t>& keep,
                            std::size_t min_stuff_points) {
  if (frame.semantic.size() != frame.instance.size()) throw ShapeError("segment_frame: misaligned label arrays");
  if (!keep.empty() && keep.size() != frame.size()) throw ShapeError("segment_frame: mask length mismatch");
  std::map<std::pair<std::uint16_t, std::uint16_t>, std::vector<std::uint32_t>> things, stuff, unassigned;
  FrameSegments out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!keep.empty() && !keep[i]) {
      ++out.ignored_points;
      continue;
    }
    const auto cls = frame.semantic[i];
    const auto p = static_cast<std::uint32_t>(i);
    if (classes.is_thing(cls)) {
      (frame.instance[i] != 0 ? things : unassigned)[{cls, frame.instance[i]}].push_back(p);
    } else {
      stuff[{cls, 0}].push_back(p);
    }
  }
  // Merge things and stuff in (class, instance) order.
  std::map<std::pair<std::uint16_t, std::uint16_t>, std::vector<std::uint32_t>> all = std::move(things);
  for (auto& [key, pts] : stuff) {
    if (pts.size() < min_stuff_points) {
      out.ignored_points += pts.size();
      continue;
    }
    all.emplace(key, std::move(pts));
  }
  for (auto& [key, pts] : all) out.segments.push_back({key.first, key.second, std::move(pts)});
  for (auto& [key, pts] : unassigned) out.unassigned.push_back({key.first, 0, std::move(pts)});
  return out;
}

SegmentMatch match_segments(const std::vector<Segment>& pred, const std::vector<Segment>& gt, std::size_t num_classes) {
  SegmentMatch m;
  m.per_class.resize(num_classes);
  auto check = [&](const Segment& s) {
    if (s.cls >= num_classes) throw DataError("class id " + std::to_string(s.cls) + " is outside the class table");
  };
  std::unordered_map<std::uint32_t, std::size_t> gt_of_point;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    check(gt[g]);
    for (auto p : gt[g].points) gt_of_point[p] = g;
  }
  std::vector<std::uint8_t> gt_matched(gt.size(), 0);
  for (std::size_t q = 0; q < pred.size(); ++q) {
    check(pred[q]);
    std::map<std::size_t, std::size_t> overlap;
    for (auto p : pred[q].points) {
      const auto it = gt_of_point.find(p);
      if (it != gt_of_point.end() && gt[it->second].cls == pred[q].cls) ++overlap[it->second];
    }
    bool matched = false;
    for (const auto& [g, inter] : overlap) {
      const double uni = static_cast<double>(pred[q].points.size() + gt[g].points.size() - inter);
      const double iou = static_cast<double>(inter) / uni;
      if (iou > 0.5) {
        if (gt_matched[g] || matched) throw Error("match_segments: a segment matched twice");
        m.per_class[pred[q].cls].tp.push_back({q, g, iou});
        gt_matched[g] = 1;
        matched = true;
      }
    }
    if (!matched) m.per_class[pred[q].cls].fp.push_back(q);
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (!gt_matched[g]) m.per_class[gt[g].cls].fn.push_back(g);
  }
  return m;
}

MiouResult compute_miou(const std::vector<std::uint16_t>& pred, const std::vector<std::uint16_t>& gt,
                        std::size_t num_classes, std::optional<std::uint16_t> ignore_class) {
  if (pred.size() != gt.size()) throw ShapeError("compute_miou: arrays differ in length");
  std::vector<std::uint64_t> tp(num_classes, 0), pred_count(num_classes, 0), gt_count(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (ignore_class && gt[i] == *ignore_class) continue;
    if (pred[i] >= num_classes || gt[i] >= num_classes) throw DataError("compute_miou: class id out of range");
    ++pred_count[pred[i]];
    ++gt_count[gt[i]];
    if (pred[i] == gt[i]) ++tp[gt[i]];
  }
  MiouResult r;
  r.per_class.resize(num_classes);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (ignore_class && c == *ignore_class) continue;
    const std::uint64_t uni = pred_count[c] + gt_count[c] - tp[c];
    if (uni == 0) continue;
    r.per_class[c] = static_cast<double>(tp[c]) / static_cast<double>(uni);
    sum += *r.per_class[c];
    ++n;
  }
  if (n > 0) r.mean = sum / static_cast<double>(n);
  return r;
}

// ---------------------------------------------------------------------------

PanopticEvaluator::PanopticEvaluator(ClassTable classes, EvalOptions options)
    : classes_(std::move(classes)), options_(options) {
  const std::size_t c = classes_.num_classes();
  tp_iou_.resize(c);
  fp_.assign(c, 0);
  fn_.assign(c, 0);
  confusion_.assign(c * c, 0);
}

void PanopticEvaluator::add_frame(const PanopticFrame& pred, const PanopticFrame& gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("evaluator: prediction has " + std::to_string(pred.size()) + " points, ground truth " +
                     std::to_string(gt.size()));
  }
  const std::size_t c = classes_.num_classes();
  std::vector<std::uint8_t> keep(gt.size(), 1);
  if (options_.ignore_class) {
    for (std::size_t i = 0; i < gt.size(); ++i) keep[i] = gt.semantic[i] != *options_.ignore_class;
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!keep[i]) continue;
    if (pred.semantic[i] >= c || gt.semantic[i] >= c) throw DataError("evaluator: class id out of range");
    ++confusion_[gt.semantic[i] * c + pred.semantic[i]];
  }
  const FrameSegments ps = segment_frame(pred, classes_, keep, options_.min_stuff_points);
  const FrameSegments gs = segment_frame(gt, classes_, keep, options_.min_stuff_points);
  const SegmentMatch m = match_segments(ps.segments, gs.segments, c);
  for (std::size_t k = 0; k < c; ++k) {
    for (const auto& tp : m.per_class[k].tp) tp_iou_[k].push_back(tp.iou);
    fp_[k] += m.per_class[k].fp.size();
    fn_[k] += m.per_class[k].fn.size();
  }
  ++frames_;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

PQReport PanopticEvaluator::report() const {
  const std::size_t c = classes_.num_classes();
  PQReport r;
  r.frames = frames_;
  std::vector<double> pq, pq_dagger, sq, rq, pq_th, sq_th, rq_th, pq_st, sq_st, rq_st, iou;
  for (std::uint16_t id : classes_.ids()) {
    if (options_.ignore_class && id == *options_.ignore_class) continue;
    ClassQuality q;
    q.id = id;
    q.name = classes_.info(id).name;
    q.thing = classes_.is_thing(id);
    q.tp = tp_iou_[id].size();
    q.fp = fp_[id];
    q.fn = fn_[id];
    std::vector<double> ious = tp_iou_[id];
    std::sort(ious.begin(), ious.end());
    const double iou_sum = std::accumulate(ious.begin(), ious.end(), 0.0);
    const double denom = static_cast<double>(q.tp) + 0.5 * static_cast<double>(q.fp) + 0.5 * static_cast<double>(q.fn);
    if (denom > 0.0) {
      q.pq = iou_sum / denom;
      q.sq = q.tp ? iou_sum / static_cast<double>(q.tp) : 0.0;
      q.rq = static_cast<double>(q.tp) / denom;
    }
    std::uint64_t inter = confusion_[id * c + id], gt_n = 0, pred_n = 0;
    for (std::size_t k = 0; k < c; ++k) {
      gt_n += confusion_[id * c + k];
      pred_n += confusion_[k * c + id];
    }
    if (gt_n + pred_n > 0) {
      q.iou = static_cast<double>(inter) / static_cast<double>(gt_n + pred_n - inter);
      iou.push_back(*q.iou);
    }
    if (q.tp + q.fn > 0) {  // present in ground truth
      pq.push_back(*q.pq);
      sq.push_back(*q.sq);
      rq.push_back(*q.rq);
      pq_dagger.push_back(q.thing ? *q.pq : q.iou.value_or(0.0));
      (q.thing ? pq_th : pq_st).push_back(*q.pq);
      (q.thing ? sq_th : sq_st).push_back(*q.sq);
      (q.thing ? rq_th : rq_st).push_back(*q.rq);
    }
    r.classes.push_back(std::move(q));
  }
  r.pq = mean_of(pq);
  r.pq_dagger = mean_of(pq_dagger);
  r.sq = mean_of(sq);
  r.rq = mean_of(rq);
  r.pq_th = mean_of(pq_th);
  r.sq_th = mean_of(sq_th);
  r.rq_th = mean_of(rq_th);
  r.pq_st = mean_of(pq_st);
  r.sq_st = mean_of(sq_st);
  r.rq_st = mean_of(rq_st);
  r.miou = mean_of(iou);
  return r;
}

PQReport compute_pq(const std::vector<PanopticFrame>& pred, const std::vector<PanopticFrame>& gt,
                    const ClassTable& classes, const EvalOptions& options) {
  if (pred.size() != gt.size()) throw ShapeError("compute_pq: frame lists differ in length");
  PanopticEvaluator ev(classes, options);
  for (std::size_t f = 0; f < pred.size(); ++f) ev.add_frame(pred[f], gt[f]);
  return ev.report();
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json value_or_undefined(const std::optional<double>& v) {
  if (v) return *v;
  return "undefined";
}

}  // namespace

nlohmann::json report_to_json(const PQReport& report) {
  using nlohmann::json;
  json classes = json::array();
  for (const auto& q : report.classes) {
    classes.push_back({{"id", q.id},
                       {"name", q.name},
                       {"kind", q.thing ? "thing" : "stuff"},
                       {"tp", q.tp},
                       {"fp", q.fp},
                       {"fn", q.fn},
                       {"pq", value_or_undefined(q.pq)},
                       {"sq", value_or_undefined(q.sq)},
                       {"rq", value_or_undefined(q.rq)},
                       {"iou", value_or_undefined(q.iou)}});
  }
  return {{"frames", report.frames},
          {"pq", value_or_undefined(report.pq)},
          {"pq_dagger", value_or_undefined(report.pq_dagger)},
          {"sq", value_or_undefined(report.sq)},
          {"rq", value_or_undefined(report.rq)},
          {"pq_th", value_or_undefined(report.pq_th)},
          {"sq_th", value_or_undefined(report.sq_th)},
          {"rq_th", value_or_undefined(report.rq_th)},
          {"pq_st", value_or_undefined(report.pq_st)},
          {"sq_st", value_or_undefined(report.sq_st)},
          {"rq_st", value_or_undefined(report.rq_st)},
          {"miou", value_or_undefined(report.miou)},
          {"classes", classes}};
}

std::string report_table(const std::vector<std::pair<std::string, PQReport>>& rows) {
  static const char* kHeaders[] = {"PQ", "PQ†", "RQ", "SQ", "PQ^Th", "RQ^Th", "SQ^Th", "PQ^St", "RQ^St", "SQ^St", "mIoU"};
  std::size_t name_width = 6;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * *v);
    return std::string(buf);
  };
  auto pad = [](const std::string& s, std::size_t width, std::size_t visible) {
    return std::string(width > visible ? width - visible : 0, ' ') + s;
  };
  constexpr std::size_t kCol = 7;
  std::ostringstream out;
  out << "Method" << std::string(name_width - 6, ' ');
  for (const char* h : kHeaders) {
    const std::string s(h);
    // "†" is three bytes but one column wide.
    const std::size_t visible = s == "PQ†" ? 3 : s.size();
    out << pad(s, kCol, visible);
  }
  out << '\n';
  for (const auto& [name, r] : rows) {
    out << name << std::string(name_width - name.size(), ' ');
    for (const auto& v : {r.pq, r.pq_dagger, r.rq, r.sq, r.pq_th, r.rq_th, r.sq_th, r.pq_st, r.rq_st, r.sq_st, r.miou}) {
      const std::string s = cell(v);
      out << pad(s, kCol, s.size());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace panograph
