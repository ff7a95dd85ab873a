#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "docingest/geometry.hpp"
#include "docingest/rng.hpp"

namespace docingest {
namespace {

Region cell(double x0, double y0, double x1, double y1, double score = 1.0) {
  return {BBox(x0, y0, x1, y1), RegionClass::cell, score};
}

BBox random_box(Rng& rng) {
  const double x = rng.uniform(0, 100);
  const double y = rng.uniform(0, 100);
  return {x, y, x + rng.uniform(1, 40), y + rng.uniform(1, 40)};
}

TEST(BBox, RejectsDegenerateAndNonFinite) {
  EXPECT_THROW(BBox(0, 0, 0, 10), std::invalid_argument);
  EXPECT_THROW(BBox(0, 0, 10, -1), std::invalid_argument);
  EXPECT_THROW(BBox(0, 0, NAN, 10), std::invalid_argument);
  EXPECT_THROW(BBox(0, 0, INFINITY, 10), std::invalid_argument);
  EXPECT_DOUBLE_EQ(BBox(1, 2, 4, 6).area(), 12.0);
}

TEST(Region, RejectsScoreOutsideUnitInterval) {
  EXPECT_THROW(Region(BBox(0, 0, 1, 1), RegionClass::cell, 1.5), std::invalid_argument);
  EXPECT_THROW(Region(BBox(0, 0, 1, 1), RegionClass::cell, -0.1), std::invalid_argument);
  EXPECT_NO_THROW(Region(BBox(0, 0, 1, 1), RegionClass::cell, 0.0));
}

TEST(RegionClass, NamesRoundTrip) {
  for (RegionClass c : kRegionClasses) {
    EXPECT_EQ(parse_region_class(to_string(c)), c);
  }
  EXPECT_FALSE(parse_region_class("figure").has_value());
}

TEST(NmsConfig, ThresholdRange) {
  EXPECT_THROW(NmsConfig(0.0), std::invalid_argument);
  EXPECT_THROW(NmsConfig(1.01), std::invalid_argument);
  EXPECT_NO_THROW(NmsConfig(1.0));
}

TEST(Iou, IdentityDisjointAndHalfShift) {
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)), 1.0);
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)), 0.0);
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)), 1.0 / 3.0);
}

TEST(Iou, MatchesRasterizedPixelCount) {
  // Integer boxes on a 20x20 grid, counted pixel by pixel.
  const BBox a(0, 0, 10, 10);
  const BBox b(5, 0, 15, 10);
  int inter = 0;
  int uni = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      const bool in_a = x >= 0 && x < 10 && y >= 0 && y < 10;
      const bool in_b = x >= 5 && x < 15 && y >= 0 && y < 10;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  EXPECT_EQ(inter, 50);
  EXPECT_EQ(uni, 150);
  EXPECT_DOUBLE_EQ(iou(a, b), static_cast<double>(inter) / uni);
}

TEST(Iou, TouchingEdgesDoNotOverlap) {
  EXPECT_DOUBLE_EQ(iou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)), 0.0);
}

TEST(Iou, SymmetricAndBoundedOnRandomBoxes) {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  }
}

TEST(BoundingUnion, Examples) {
  EXPECT_EQ(bounding_union(BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)), BBox(0, 0, 3, 3));
  EXPECT_EQ(bounding_union(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)), BBox(0, 0, 2, 2));
  EXPECT_EQ(bounding_union(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)), BBox(0, 0, 6, 6));
}

TEST(BoundingUnion, ContainsBothOnRandomBoxes) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const BBox u = bounding_union(a, b);
    EXPECT_TRUE(u.contains(a));
    EXPECT_TRUE(u.contains(b));
    EXPECT_GE(u.area(), std::max(a.area(), b.area()));
    EXPECT_EQ(u, bounding_union(b, a));
  }
}

TEST(Nms, SingleRegion) {
  const std::vector<Region> in{cell(0, 0, 1, 1)};
  EXPECT_EQ(nms(in, NmsConfig(0.7)), in);
}

TEST(Nms, IdenticalBoxesKeepHigherScore) {
  const std::vector<Region> in{cell(0, 0, 10, 10, 0.8), cell(0, 0, 10, 10, 0.9)};
  const auto out = nms(in, NmsConfig(0.7));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].score(), 0.9);
}

TEST(Nms, ThresholdDecidesSuppression) {
  const std::vector<Region> in{cell(0, 0, 10, 10, 0.9), cell(5, 0, 15, 10, 0.8)};
  EXPECT_EQ(nms(in, NmsConfig(0.3)).size(), 1u);
  const auto both = nms(in, NmsConfig(0.7));
  ASSERT_EQ(both.size(), 2u);
  EXPECT_DOUBLE_EQ(both[0].score(), 0.9);
}

TEST(Nms, TieBreakPrefersLargerArea) {
  const std::vector<Region> in{cell(0, 0, 10, 10, 0.5), cell(0, 0, 11, 10, 0.5)};
  const auto out = nms(in, NmsConfig(0.5));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].bbox(), BBox(0, 0, 11, 10));
}

TEST(Nms, RejectsMixedClasses) {
  const std::vector<Region> in{cell(0, 0, 1, 1), {BBox(0, 0, 1, 1), RegionClass::table, 1.0}};
  EXPECT_THROW(nms(in, NmsConfig(0.5)), std::invalid_argument);
}

TEST(Nms, PairwiseBoundAndOrderInvariance) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Region> in;
    const int n = static_cast<int>(rng.uniform_int(1, 30));
    for (int i = 0; i < n; ++i) {
      // Quantized scores produce ties that exercise the tie-break.
      in.push_back({random_box(rng), RegionClass::text_block,
                    static_cast<double>(rng.uniform_int(0, 4)) / 4.0});
    }
    const double t = rng.uniform(0.05, 1.0);
    const auto out = nms(in, NmsConfig(t));
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        EXPECT_LE(iou(out[i].bbox(), out[j].bbox()), t);
      }
      if (i > 0) EXPECT_TRUE(score_order_less(out[i - 1], out[i]));
    }
    auto shuffled = in;
    rng.shuffle(shuffled);
    EXPECT_EQ(nms(shuffled, NmsConfig(t)), out);
  }
}

TEST(Nms, EveryRemovedRegionHasASuppressor) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Region> in;
    for (int i = 0; i < 20; ++i) in.push_back({random_box(rng), RegionClass::cell, rng.uniform()});
    const auto out = nms(in, NmsConfig(0.4));
    for (const Region& r : in) {
      if (std::find(out.begin(), out.end(), r) != out.end()) continue;
      const bool suppressed = std::any_of(out.begin(), out.end(), [&](const Region& k) {
        return score_order_less(k, r) && iou(k.bbox(), r.bbox()) > 0.4;
      });
      EXPECT_TRUE(suppressed);
    }
  }
}

}  // namespace
}  // namespace docingest
