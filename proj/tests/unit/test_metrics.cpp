#include "panograph/metrics.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace panograph;

namespace {

ClassTable two_class_table() {
  return ClassTable({{0, "unlabeled", ClassKind::stuff}, {1, "car", ClassKind::thing}, {2, "road", ClassKind::stuff}});
}

PanopticFrame frame(std::vector<std::uint16_t> sem, std::vector<std::uint16_t> ins) { return {sem, ins}; }

const ClassQuality& quality(const PQReport& r, std::uint16_t id) {
  for (const auto& q : r.classes)
    if (q.id == id) return q;
  FAIL("class " << id << " missing from the report");
  return r.classes.front();
}

void check_close(const std::optional<double>& got, const std::optional<double>& want, double tol) {
  REQUIRE(got.has_value() == want.has_value());
  if (got) CHECK(std::abs(*got - *want) <= tol);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("IoU of one third is a false positive and a false negative") {
  // gt instance {0,1}, pred instance {1,2}: IoU 1/3.
  const auto gt = frame({1, 1, 2, 2}, {1, 1, 0, 0});
  const auto pred = frame({2, 1, 1, 2}, {0, 1, 1, 0});
  const auto r = compute_pq({pred}, {gt}, two_class_table());
  const auto& car = quality(r, 1);
  CHECK(car.tp == 0);
  CHECK(car.fp == 1);
  CHECK(car.fn == 1);
  CHECK(*car.pq == 0.0);
}

TEST_CASE("IoU of 9/11 is a true positive with that quality") {
  std::vector<std::uint16_t> sem(12, 1), gi(12, 1), pi(12, 1);
  // gt: points 0..9; pred: points 1..10; union 11, intersection 9.
  sem[11] = 2;
  gi[11] = 0;
  pi[11] = 0;
  gi[10] = 0;
  sem[10] = 2;
  std::vector<std::uint16_t> psem = sem;
  psem[0] = 2;
  pi[0] = 0;
  psem[10] = 1;
  pi[10] = 1;
  const auto r = compute_pq({frame(psem, pi)}, {frame(sem, gi)}, two_class_table());
  const auto& car = quality(r, 1);
  CHECK(car.tp == 1);
  CHECK(*car.sq == doctest::Approx(9.0 / 11.0));
  CHECK(*car.rq == 1.0);
  CHECK(*car.pq == doctest::Approx(9.0 / 11.0));
}

TEST_CASE("one match with IoU 0.8 plus a spurious segment") {
  // gt car: 5 points; pred car 1 covers 4 of them; pred car 2 is elsewhere.
  const auto gt = frame({1, 1, 1, 1, 1, 2, 2}, {1, 1, 1, 1, 1, 0, 0});
  const auto pred = frame({1, 1, 1, 1, 2, 1, 2}, {3, 3, 3, 3, 0, 4, 0});
  const auto r = compute_pq({pred}, {gt}, two_class_table());
  const auto& car = quality(r, 1);
  CHECK(car.tp == 1);
  CHECK(car.fp == 1);
  CHECK(car.fn == 0);
  CHECK(*car.sq == doctest::Approx(0.8));
  CHECK(*car.rq == doctest::Approx(1.0 / 1.5));
  CHECK(*car.pq == doctest::Approx(0.8 / 1.5));
}

TEST_CASE("mIoU from the confusion matrix [[3,1],[1,3]] is 0.6") {
  const std::vector<std::uint16_t> gt = {0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<std::uint16_t> pred = {0, 0, 0, 1, 1, 1, 1, 0};
  const auto m = compute_miou(pred, gt, 2);
  CHECK(*m.mean == doctest::Approx(0.6));
  CHECK(*m.per_class[0] == doctest::Approx(0.6));
  const auto ignored = compute_miou(pred, gt, 3, std::uint16_t{0});
  CHECK(*ignored.mean == doctest::Approx(0.75));  // class 1: 3 / (4 + 0)
  CHECK_FALSE(ignored.per_class[2].has_value());
}

TEST_CASE("the evaluator agrees with a brute-force reference") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const ClassTable classes = oracle::random_class_table(rng, 6);
    std::vector<PanopticFrame> preds, gts;
    const std::size_t frames = 1 + rng.below(4);
    for (std::size_t f = 0; f < frames; ++f) {
      auto [p, g] = oracle::random_eval_frame(rng, classes, 8, 150);
      preds.push_back(std::move(p));
      gts.push_back(std::move(g));
    }
    const auto got = compute_pq(preds, gts, classes);
    const auto want = oracle::reference_pq(preds, gts, classes, std::uint16_t{0});
    check_close(got.pq, want.pq_all, 1e-9);
    check_close(got.pq_dagger, want.pq_dagger, 1e-9);
    check_close(got.sq, want.sq_all, 1e-9);
    check_close(got.rq, want.rq_all, 1e-9);
    check_close(got.pq_th, want.pq_th, 1e-9);
    check_close(got.pq_st, want.pq_st, 1e-9);
    check_close(got.sq_st, want.sq_st, 1e-9);
    check_close(got.rq_th, want.rq_th, 1e-9);
    check_close(got.miou, want.miou, 1e-9);
    for (const auto& q : got.classes) {
      if (q.id == 0) continue;
      const bool defined = want.pq.count(q.id) > 0;
      REQUIRE(q.pq.has_value() == defined);
      if (defined) CHECK(std::abs(*q.pq - want.pq.at(q.id)) <= 1e-9);
    }
  }
}

TEST_CASE("reports do not depend on frame order or instance numbering") {
  Rng rng(5);
  const ClassTable classes = oracle::random_class_table(rng, 6);
  std::vector<PanopticFrame> preds, gts;
  for (int f = 0; f < 6; ++f) {
    auto [p, g] = oracle::random_eval_frame(rng, classes, 8, 200);
    preds.push_back(std::move(p));
    gts.push_back(std::move(g));
  }
  const auto a = report_to_json(compute_pq(preds, gts, classes));
  std::vector<PanopticFrame> rp(preds.rbegin(), preds.rend()), rg(gts.rbegin(), gts.rend());
  CHECK(report_to_json(compute_pq(rp, rg, classes)) == a);
  for (auto& p : preds)
    for (auto& id : p.instance)
      if (id != 0) id = static_cast<std::uint16_t>(1000 + 3 * id);
  CHECK(report_to_json(compute_pq(preds, gts, classes)) == a);
}

TEST_CASE("a perfect prediction scores exactly one") {
  Rng rng(8);
  const ClassTable classes = oracle::random_class_table(rng, 6);
  std::vector<PanopticFrame> gts;
  for (int f = 0; f < 5; ++f) gts.push_back(oracle::random_eval_frame(rng, classes, 8, 200).second);
  const auto r = compute_pq(gts, gts, classes);
  for (const auto& v : {r.pq, r.sq, r.rq, r.pq_dagger, r.miou}) {
    REQUIRE(v.has_value());
    CHECK(std::abs(*v - 1.0) <= 1e-12);
  }
}

TEST_CASE("classes absent from the ground truth are undefined") {
  const auto gt = frame({2, 2}, {0, 0});
  const auto r = compute_pq({gt}, {gt}, two_class_table());
  CHECK_FALSE(quality(r, 1).pq.has_value());
  CHECK_FALSE(r.pq_th.has_value());
  CHECK(*r.pq_st == 1.0);
  const auto j = report_to_json(r);
  CHECK(j["pq_th"] == "undefined");
  CHECK(j["classes"][0]["id"] == 1);
  CHECK(j["classes"][0]["pq"] == "undefined");
  CHECK(j["pq"] == 1.0);
  const std::string table = report_table({{"run", r}});
  CHECK(table.find("100.0") != std::string::npos);
  CHECK(table.find(" -") != std::string::npos);
  CHECK(table.rfind("Method", 0) == 0);
}

TEST_CASE("segment counts add up and ignored points drop from both sides") {
  Rng rng(12);
  const ClassTable classes = oracle::random_class_table(rng, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [pred, gt] = oracle::random_eval_frame(rng, classes, 8, 300);
    std::vector<std::uint8_t> keep(gt.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) kept += keep[i] = gt.semantic[i] != 0;
    const FrameSegments s = segment_frame(pred, classes, keep);
    std::size_t total = 0;
    for (const auto& seg : s.segments) total += seg.points.size();
    for (const auto& seg : s.unassigned) total += seg.points.size();
    CHECK(total == kept);
    CHECK(s.ignored_points == gt.size() - kept);
  }
}

TEST_CASE("matching never reuses a segment") {
  Rng rng(13);
  const ClassTable classes = oracle::random_class_table(rng, 6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [pred, gt] = oracle::random_eval_frame(rng, classes, 8, 300);
    const auto ps = segment_frame(pred, classes), gs = segment_frame(gt, classes);
    const auto m = match_segments(ps.segments, gs.segments, classes.num_classes());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& c : m.per_class) {
      tp += c.tp.size();
      fp += c.fp.size();
      fn += c.fn.size();
      for (const auto& t : c.tp) CHECK(t.iou > 0.5);
    }
    CHECK(tp + fp == ps.segments.size());
    CHECK(tp + fn == gs.segments.size());
  }
}

TEST_CASE("small stuff segments can be discarded") {
  const auto gt = frame({2, 2, 2, 1}, {0, 0, 0, 1});
  const auto pred = frame({2, 1, 1, 1}, {0, 1, 1, 1});
  EvalOptions opts;
  opts.min_stuff_points = 2;
  const auto r = compute_pq({pred}, {gt}, two_class_table(), opts);
  CHECK(quality(r, 2).fn == 1);  // the one-point pred road segment is dropped
  CHECK(quality(r, 2).fp == 0);
}

TEST_CASE("mismatched frames are rejected") {
  CHECK_THROWS_AS(compute_pq({frame({1}, {1})}, {frame({1, 1}, {1, 1})}, two_class_table()), ShapeError);
  CHECK_THROWS_AS(compute_pq({frame({9}, {0})}, {frame({1}, {1})}, two_class_table()), DataError);
  CHECK_THROWS_AS(compute_pq({}, {frame({1}, {1})}, two_class_table()), ShapeError);
}

}  // TEST_SUITE
