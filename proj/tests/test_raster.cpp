#include <gtest/gtest.h>

#include <map>
#include <random>

#include "promptseg/raster.hpp"
#include "support/fixtures.hpp"
#include "support/reference.hpp"

using namespace promptseg;

namespace {

/// Labels agree up to a renaming that preserves row-major first appearance.
void expect_same_labels(const ComponentSet& got, const ref::Labels& want) {
  ASSERT_EQ(got.count, want.count);
  for (Index i = 0; i < got.label_map.size(); ++i) ASSERT_EQ(got.label_map.data()[i], want.label[i]) << "pixel " << i;
  for (int k = 0; k < got.count; ++k) EXPECT_EQ(got.areas[k], want.areas[k]);
}

}  // namespace

TEST(ConnectedComponents, EmptyMaskHasNone) {
  const auto cc = connected_components(BinaryMask(6, 4));
  EXPECT_EQ(cc.count, 0);
  EXPECT_TRUE(cc.areas.empty());
  EXPECT_TRUE((cc.label_map == 0).all());
}

TEST(ConnectedComponents, TwoSquares) {
  const auto m = fixtures::rect_mask(10, 10, 0, 0, 3, 3) | fixtures::rect_mask(10, 10, 5, 5, 8, 8);
  const auto cc = connected_components(m, 8);
  EXPECT_EQ(cc.count, 2);
  EXPECT_EQ(cc.areas, (std::vector<Index>{9, 9}));
}

TEST(ConnectedComponents, DiagonalNeighboursDependOnConnectivity) {
  const auto m = fixtures::ascii_mask({"#.", ".#"});
  EXPECT_EQ(connected_components(m, 8).count, 1);
  EXPECT_EQ(connected_components(m, 4).count, 2);
}

TEST(ConnectedComponents, RejectsOtherConnectivity) {
  EXPECT_THROW(connected_components(BinaryMask(2, 2), 6), PreconditionError);
}

TEST(ConnectedComponents, MatchesFloodFill) {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 60; ++i) {
    const auto m = fixtures::random_mask(gen, 23, 17);
    for (int conn : {4, 8}) {
      SCOPED_TRACE(testing::Message() << "instance " << i << " connectivity " << conn);
      const auto cc = connected_components(m, conn);
      expect_same_labels(cc, ref::flood_fill(m, conn));
      Index total = 0;
      for (auto a : cc.areas) total += a;
      EXPECT_EQ(total, m.count());
    }
  }
}

TEST(DistanceToBackground, Examples) {
  EXPECT_TRUE((distance_to_background(BinaryMask(5, 5)) == 0.0).all());
  Grid<bool> one = Grid<bool>::Zero(5, 5);
  one(2, 3) = true;
  const auto d = distance_to_background(BinaryMask(one));
  EXPECT_DOUBLE_EQ(d(2, 3), 1.0);
  EXPECT_DOUBLE_EQ(d.sum(), 1.0);
  EXPECT_DOUBLE_EQ(distance_to_background(fixtures::rect_mask(9, 9, 2, 2, 7, 7))(4, 4), 3.0);
}

TEST(DistanceToBackground, ImageBorderCountsAsBackground) {
  const BinaryMask full(Grid<bool>::Constant(5, 7, true));
  const auto d = distance_to_background(full);
  EXPECT_DOUBLE_EQ(d(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d(2, 3), 3.0);
}

TEST(DistanceToBackground, MatchesExhaustiveSearch) {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 40; ++i) {
    const auto m = fixtures::random_mask(gen, 19, 14);
    const auto got = distance_to_background(m);
    const auto want = ref::distance_to_background(m);
    for (Index p = 0; p < got.size(); ++p) ASSERT_NEAR(got.data()[p], want[p], 1e-12) << "instance " << i;
  }
}

TEST(FeatureTransform, MatchesExhaustiveSearchIncludingTies) {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 40; ++i) {
    const auto sites = fixtures::noise_mask(gen, 15, 12, i % 2 ? 0.05 : 0.3);
    const auto got = feature_transform(sites.bits());
    const auto want = ref::nearest_site(sites.bits());
    for (Index p = 0; p < sites.size(); ++p) {
      ASSERT_EQ(got.squared_distance.data()[p], want.squared_distance[p]) << "instance " << i << " pixel " << p;
      ASSERT_EQ(got.nearest.data()[p], want.index[p]) << "instance " << i << " pixel " << p;
    }
  }
}

TEST(FeatureTransform, NoSitesMeansNoNeighbour) {
  const auto ft = feature_transform(Grid<bool>::Zero(3, 4));
  EXPECT_TRUE((ft.squared_distance == -1).all());
  EXPECT_TRUE((ft.nearest == -1).all());
}

TEST(DeepestPoint, CentreOfDiskAndFirstOnTies) {
  Grid<bool> disk(21, 21);
  for (Index y = 0; y < 21; ++y)
    for (Index x = 0; x < 21; ++x) disk(y, x) = (x - 10) * (x - 10) + (y - 10) * (y - 10) <= 49;
  const auto p = deepest_point(BinaryMask(disk));
  EXPECT_EQ(p.x, 10);
  EXPECT_EQ(p.y, 10);
  EXPECT_EQ(p.label, PointLabel::foreground);

  const auto bar = fixtures::rect_mask(8, 5, 1, 1, 7, 4);  // a 6x3 bar: row 2 ties along x = 2..5
  const auto q = deepest_point(bar, PointLabel::background);
  EXPECT_EQ(q.x, 1 + 1);
  EXPECT_EQ(q.y, 2);
  EXPECT_EQ(q.label, PointLabel::background);
  EXPECT_THROW(deepest_point(BinaryMask(3, 3)), PreconditionError);
}

TEST(BoundingBox, Examples) {
  Grid<bool> px = Grid<bool>::Zero(8, 8);
  px(4, 3) = true;
  EXPECT_EQ(bounding_box(BinaryMask(px)), (BoxPrompt{3, 4, 4, 5}));

  const auto ell = fixtures::ascii_mask({"....", "....", ".#..", ".#..", ".#..", ".#..", ".###", "...."});
  EXPECT_EQ(bounding_box(ell), (BoxPrompt{1, 2, 4, 7}));

  const BinaryMask full(Grid<bool>::Constant(4, 6, true));
  EXPECT_EQ(bounding_box(full), (BoxPrompt{0, 0, 6, 4}));
  EXPECT_THROW(bounding_box(BinaryMask(2, 2)), PreconditionError);
}

TEST(ComponentBoxes, OnePerComponentAgreeingWithBoundingBox) {
  std::mt19937_64 gen(14);
  for (int i = 0; i < 30; ++i) {
    const auto m = fixtures::random_mask(gen, 20, 16);
    const auto cc = connected_components(m, 8);
    const auto boxes = component_boxes(cc);
    ASSERT_EQ(boxes.size(), static_cast<std::size_t>(cc.count));
    for (int k = 1; k <= cc.count; ++k) EXPECT_EQ(boxes[k - 1], bounding_box(cc.component(k)));
  }
}

TEST(Morph, Examples) {
  std::mt19937_64 gen(15);
  const auto any = fixtures::random_mask(gen, 9, 9);
  EXPECT_EQ(morph(any, MorphOp::erode, 0), any);
  EXPECT_EQ(morph(fixtures::rect_mask(9, 9, 2, 2, 7, 7), MorphOp::erode, 1), fixtures::rect_mask(9, 9, 3, 3, 6, 6));
  Grid<bool> one = Grid<bool>::Zero(5, 5);
  one(2, 2) = true;
  EXPECT_EQ(morph(BinaryMask(one), MorphOp::dilate, 1), fixtures::ascii_mask({".....", "..#..", ".###.", "..#..", "....."}));
}

TEST(Morph, MatchesNeighbourhoodReference) {
  std::mt19937_64 gen(16);
  for (int i = 0; i < 40; ++i) {
    const auto m = fixtures::random_mask(gen, 13, 10);
    const int it = i % 4;
    EXPECT_EQ(morph(m, MorphOp::erode, it), ref::morph(m, false, it)) << "instance " << i;
    EXPECT_EQ(morph(m, MorphOp::dilate, it), ref::morph(m, true, it)) << "instance " << i;
  }
}

TEST(Morph, ErosionShrinksDilationGrows) {
  std::mt19937_64 gen(17);
  for (int i = 0; i < 30; ++i) {
    const auto m = fixtures::random_mask(gen, 16, 12);
    EXPECT_EQ((morph(m, MorphOp::erode, 2) - m).count(), 0);
    EXPECT_EQ((m - morph(m, MorphOp::dilate, 2)).count(), 0);
  }
}

TEST(OverlapFraction, Examples) {
  const auto gt = fixtures::rect_mask(10, 3, 0, 0, 5, 3);
  EXPECT_DOUBLE_EQ(overlap_fraction(fixtures::rect_mask(10, 3, 1, 1, 3, 2), gt), 1.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(fixtures::rect_mask(10, 3, 6, 0, 9, 2), gt), 0.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(fixtures::rect_mask(10, 3, 4, 0, 5, 1) | fixtures::rect_mask(10, 3, 0, 2, 9, 3),
                                    fixtures::rect_mask(10, 3, 0, 0, 9, 3) - fixtures::rect_mask(10, 3, 8, 2, 9, 3)),
                   0.9);
  EXPECT_THROW(overlap_fraction(BinaryMask(10, 3), gt), PreconditionError);
}

TEST(BoxMask, FillsHalfOpenBox) {
  const auto m = box_mask({1, 2, 4, 3}, 6, 5);
  EXPECT_EQ(m.count(), 3);
  EXPECT_TRUE(m(2, 1) && m(2, 3));
  EXPECT_FALSE(m(2, 4));
  EXPECT_EQ(bounding_box(m), (BoxPrompt{1, 2, 4, 3}));
}
