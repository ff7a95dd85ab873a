#include <gtest/gtest.h>

#include <stdexcept>
#include <vector>

#include "docingest/evaluation.hpp"
#include "docingest/json_io.hpp"
#include "docingest/rng.hpp"

namespace docingest::eval {
namespace {

Region cell(double x0, double y0, double x1, double y1, double score = 1.0) {
  return {BBox(x0, y0, x1, y1), RegionClass::cell, score};
}

TEST(ClassCounts, ConfusionFixtures) {
  const ClassCounts c{2, 1, 1};
  EXPECT_DOUBLE_EQ(c.precision(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.recall(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.f1(), 2.0 / 3.0);

  const ClassCounts d{3, 1, 2};
  EXPECT_DOUBLE_EQ(d.precision(), 0.75);
  EXPECT_DOUBLE_EQ(d.recall(), 0.6);
  EXPECT_DOUBLE_EQ(d.f1(), 2 * 0.75 * 0.6 / (0.75 + 0.6));

  const ClassCounts none{0, 0, 0};
  EXPECT_DOUBLE_EQ(none.precision(), 1.0);
  EXPECT_DOUBLE_EQ(none.recall(), 1.0);
  const ClassCounts miss{0, 2, 3};
  EXPECT_DOUBLE_EQ(miss.f1(), 0.0);
}

TEST(MatchDetections, PerfectPrediction) {
  const std::vector<Region> truth{cell(0, 0, 10, 10), cell(20, 0, 30, 10),
                                  {BBox(0, 50, 100, 80), RegionClass::text_block, 1.0}};
  const auto r = match_detections(truth, truth, EvalConfig{});
  EXPECT_DOUBLE_EQ(r.micro().precision(), 1.0);
  EXPECT_DOUBLE_EQ(r.micro().recall(), 1.0);
  EXPECT_EQ(r.counts(RegionClass::cell), (ClassCounts{2, 0, 0}));
}

TEST(MatchDetections, TwoOfThree) {
  const std::vector<Region> truth{cell(0, 0, 10, 10), cell(20, 0, 30, 10), cell(40, 0, 50, 10)};
  const std::vector<Region> pred{cell(0, 0, 10, 10, 0.9), cell(20, 0, 30, 10, 0.8),
                                 cell(100, 100, 110, 110, 0.7)};
  const auto c = match_detections(pred, truth, EvalConfig{}).counts(RegionClass::cell);
  EXPECT_EQ(c, (ClassCounts{2, 1, 1}));
  EXPECT_DOUBLE_EQ(c.precision(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.recall(), 2.0 / 3.0);
}

TEST(MatchDetections, BelowThresholdIsAMissAndAFalseAlarm) {
  // IoU = 80 / 100 = 0.8.
  const std::vector<Region> truth{cell(0, 0, 10, 10)};
  const std::vector<Region> pred{cell(0, 0, 8, 10)};
  ASSERT_DOUBLE_EQ(iou(pred[0].bbox(), truth[0].bbox()), 0.8);
  EXPECT_EQ(match_detections(pred, truth, EvalConfig{}).counts(RegionClass::cell),
            (ClassCounts{0, 1, 1}));
  EXPECT_EQ(match_detections(pred, truth, EvalConfig{0.8}).counts(RegionClass::cell),
            (ClassCounts{1, 0, 0}));
}

TEST(MatchDetections, ClassesNeverCrossMatch) {
  const std::vector<Region> truth{cell(0, 0, 10, 10)};
  const std::vector<Region> pred{{BBox(0, 0, 10, 10), RegionClass::table, 1.0}};
  const auto r = match_detections(pred, truth, EvalConfig{});
  EXPECT_EQ(r.counts(RegionClass::cell), (ClassCounts{0, 0, 1}));
  EXPECT_EQ(r.counts(RegionClass::table), (ClassCounts{0, 1, 0}));
}

TEST(MatchDetections, OneToOne) {
  const std::vector<Region> truth{cell(0, 0, 10, 10)};
  const std::vector<Region> pred{cell(0, 0, 10, 10, 0.9), cell(0, 0, 10, 10, 0.8)};
  EXPECT_EQ(match_detections(pred, truth, EvalConfig{}).counts(RegionClass::cell),
            (ClassCounts{1, 1, 0}));
}

TEST(MatchDetections, CountsBalanceAndOrderInvariance) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Region> truth;
    std::vector<Region> pred;
    for (int i = 0; i < 15; ++i) {
      const double x = rng.uniform(0, 300);
      const double y = rng.uniform(0, 300);
      const auto cls = kRegionClasses[static_cast<std::size_t>(rng.uniform_int(0, 3))];
      truth.push_back({BBox(x, y, x + 20, y + 20), cls, 1.0});
      const double dx = rng.uniform(-3, 3);
      pred.push_back({BBox(x + dx, y, x + dx + 20, y + 20), cls, rng.uniform()});
    }
    const auto report = match_detections(pred, truth, EvalConfig{});
    for (RegionClass cls : kRegionClasses) {
      const auto& c = report.counts(cls);
      std::size_t n_truth = 0;
      std::size_t n_pred = 0;
      for (const Region& t : truth) n_truth += t.label() == cls;
      for (const Region& p : pred) n_pred += p.label() == cls;
      EXPECT_EQ(c.tp + c.fn, n_truth);
      EXPECT_EQ(c.tp + c.fp, n_pred);
    }
    rng.shuffle(pred);
    rng.shuffle(truth);
    EXPECT_EQ(match_detections(pred, truth, EvalConfig{}), report);
  }
}

TEST(DetectionReport, MergesBySumming) {
  DetectionReport a;
  a.counts(RegionClass::cell) = {1, 2, 3};
  DetectionReport b;
  b.counts(RegionClass::cell) = {4, 5, 6};
  b.counts(RegionClass::table) = {1, 0, 0};
  a += b;
  EXPECT_EQ(a.counts(RegionClass::cell), (ClassCounts{5, 7, 9}));
  EXPECT_EQ(a.micro(), (ClassCounts{6, 7, 9}));
}

TEST(DetectionReport, JsonCarriesRates) {
  DetectionReport r;
  r.counts(RegionClass::cell) = {2, 1, 1};
  const auto j = report_to_json(r);
  EXPECT_EQ(j["classes"]["cell"]["tp"], 2);
  EXPECT_DOUBLE_EQ(j["classes"]["cell"]["precision"].get<double>(), 2.0 / 3.0);
  EXPECT_TRUE(j.contains("micro"));
}

TEST(EvalConfig, ThresholdRange) {
  EXPECT_THROW(EvalConfig{0.0}.validate(), std::invalid_argument);
  EXPECT_THROW(EvalConfig{1.5}.validate(), std::invalid_argument);
}

TEST(TopkError, Fixtures) {
  const std::vector<std::vector<int>> first{{0, 1, 2}, {1, 0, 2}};
  EXPECT_DOUBLE_EQ(topk_error(first, std::vector<int>{0, 1}, 1), 0.0);

  const std::vector<std::vector<int>> third{{5, 6, 0, 7, 8}, {5, 6, 1, 7, 8}};
  EXPECT_DOUBLE_EQ(topk_error(third, std::vector<int>{0, 1}, 1), 1.0);
  EXPECT_DOUBLE_EQ(topk_error(third, std::vector<int>{0, 1}, 5), 0.0);

  // Truth ranks 1, 2, 6, 3.
  const std::vector<std::vector<int>> ranked{{9, 1, 2, 3, 4, 5, 6},
                                             {1, 9, 2, 3, 4, 5, 6},
                                             {1, 2, 3, 4, 5, 9, 6},
                                             {1, 2, 9, 3, 4, 5, 6}};
  EXPECT_DOUBLE_EQ(topk_error(ranked, std::vector<int>(4, 9), 5), 0.25);
}

TEST(TopkError, Errors) {
  const std::vector<std::vector<int>> ranked{{0, 1}};
  EXPECT_THROW(topk_error(ranked, std::vector<int>{0}, 3), std::invalid_argument);
  EXPECT_THROW(topk_error(ranked, std::vector<int>{0}, 0), std::invalid_argument);
  EXPECT_THROW(topk_error(ranked, std::vector<int>{0, 1}, 1), std::invalid_argument);
}

TEST(FragmentAccuracy, Fixtures) {
  EXPECT_DOUBLE_EQ(fragment_accuracy(10, 0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(fragment_accuracy(3, 1, 1, 1), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(fragment_accuracy(0, 0, 5, 5), 0.0);
  EXPECT_THROW(fragment_accuracy(0, 0, 0, 0), std::invalid_argument);
}

}  // namespace
}  // namespace docingest::eval
