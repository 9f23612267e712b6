#include <gtest/gtest.h>

#include <random>

#include "selftrack/geometry.hpp"

namespace selftrack {
namespace {

TEST(Iou, IdenticalBoxesGiveOne) {
  const BBox a{3.0, 4.0, 10.0, 20.0};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
}

TEST(Iou, DisjointBoxesGiveZero) {
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 1, 1}, BBox{5, 5, 1, 1}), 0.0);
}

TEST(Iou, TouchingEdgesGiveZero) {
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 1, 1}, BBox{1, 0, 1, 1}), 0.0);
}

TEST(Iou, HalfShiftedSquares) {
  // intersection 1x2 = 2, union 4 + 4 - 2 = 6
  EXPECT_NEAR(iou(BBox{0, 0, 2, 2}, BBox{1, 0, 2, 2}), 1.0 / 3.0, 1e-15);
}

TEST(Iou, SymmetricAndBoundedOnRandomBoxes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> ext(0.01, 40.0);
  for (int i = 0; i < 5000; ++i) {
    const BBox a{pos(rng), pos(rng), ext(rng), ext(rng)};
    const BBox b{pos(rng), pos(rng), ext(rng), ext(rng)};
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(BBox, ValidateRejectsDegenerateBoxes) {
  EXPECT_NO_THROW((BBox{0, 0, 1, 1}.validate()));
  EXPECT_THROW((BBox{0, 0, 0, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((BBox{0, 0, 1, -2}.validate()), std::invalid_argument);
  EXPECT_THROW((BBox{std::nan(""), 0, 1, 1}.validate()), std::invalid_argument);
}

TEST(ImagePatch, ChannelMajorIndexing) {
  ImagePatch p(3, 2, 4);
  EXPECT_EQ(p.size(), 24u);
  p.at(2, 1, 3) = 0.5;
  EXPECT_EQ(p.pixels.back(), 0.5);
  EXPECT_THROW(ImagePatch(0, 2, 2), std::invalid_argument);
}

}  // namespace
}  // namespace selftrack
