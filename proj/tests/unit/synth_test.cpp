#include <gtest/gtest.h>

#include <set>

#include "selftrack/clear_mot.hpp"
#include "selftrack/synth.hpp"

namespace selftrack {
namespace {

SynthSpec one_walker(int frames) {
  SynthSpec spec;
  spec.frames = frames;
  spec.patch_height = spec.patch_width = 8;
  IdentitySpec id;
  id.id = 4;
  id.x0 = 100;
  id.y0 = 50;
  id.vx = 3;
  spec.identities = {id};
  return spec;
}

TEST(Synth, NoiseFreeDetectionsEqualGroundTruth) {
  const auto seq = synth_sequence(one_walker(10));
  ASSERT_EQ(seq.detections.size(), 10u);
  ASSERT_EQ(seq.ground_truth.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(seq.detections[i].frame, seq.ground_truth[i].frame);
    EXPECT_EQ(seq.detections[i].box, seq.ground_truth[i].box);
    EXPECT_EQ(seq.identity[i], 4);
    ASSERT_TRUE(seq.detections[i].image.has_value());
    EXPECT_EQ(seq.detections[i].image->size(), 3u * 8 * 8);
  }
}

TEST(Synth, OcclusionWindowRemovesDetectionsOnly) {
  auto spec = one_walker(10);
  spec.occlusions = {{4, 4, 6}};
  const auto seq = synth_sequence(spec);
  EXPECT_EQ(seq.ground_truth.size(), 10u);
  std::set<int> frames;
  for (const auto& d : seq.detections) frames.insert(d.frame);
  EXPECT_EQ(frames, (std::set<int>{1, 2, 3, 7, 8, 9, 10}));
}

TEST(Synth, FixedSeedIsBitwiseIdentical) {
  const auto spec = SynthSpec::benchmark(8);
  const auto a = synth_sequence(spec);
  const auto b = synth_sequence(spec);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  ASSERT_EQ(a.detections.size(), b.detections.size());
  for (std::size_t i = 0; i < a.detections.size(); ++i) {
    EXPECT_EQ(a.detections[i].box, b.detections[i].box);
    EXPECT_EQ(a.detections[i].score, b.detections[i].score);
    EXPECT_EQ(a.detections[i].image, b.detections[i].image);
  }
  EXPECT_EQ(a.matches.entries(), b.matches.entries());
  EXPECT_NE(synth_sequence(SynthSpec::benchmark(9)).ground_truth, a.ground_truth);
}

TEST(Synth, InvalidSpecsRejected) {
  auto spec = one_walker(10);
  spec.frames = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = one_walker(10);
  spec.identities.push_back(spec.identities[0]);
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = one_walker(10);
  spec.occlusions = {{9, 2, 3}};
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = one_walker(10);
  spec.occlusions = {{4, 6, 3}};
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = one_walker(10);
  spec.identities[0].width = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  EXPECT_THROW(synth_sequence(spec), std::invalid_argument);
}

TEST(Synth, GroundTruthAsHypothesisIsPerfect) {
  auto spec = SynthSpec::random(4, 30, 2);
  spec.patch_height = spec.patch_width = 4;
  const auto seq = synth_sequence(spec);
  const auto r = evaluate_clear_mot(seq.ground_truth, seq.ground_truth);
  EXPECT_EQ(r.mota, 1.0);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.mt, 4);
}

TEST(Synth, BoxMatchSourceIsPlainIou) {
  auto spec = one_walker(6);
  spec.match_source = MatchSource::BoxIoU;
  spec.match_gap = 2;
  const auto seq = synth_sequence(spec);
  EXPECT_DOUBLE_EQ(seq.matches.get(0, 2), iou(seq.detections[0].box, seq.detections[2].box));
  EXPECT_FALSE(seq.matches.contains(0, 3));
}

TEST(Synth, TrackedMatchesFollowTheFigure) {
  auto spec = one_walker(8);
  spec.identities[0].vx = 15;  // too fast for plain box overlap at distance 3
  spec.match_decay = 0.5;
  const auto seq = synth_sequence(spec);
  EXPECT_DOUBLE_EQ(seq.matches.get(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(seq.matches.get(0, 3), 0.25);
  EXPECT_LT(iou(seq.detections[0].box, seq.detections[3].box), 0.1);
}

TEST(Synth, CrossingWalkersOccludeEachOther) {
  const auto spec = SynthSpec::benchmark(1);
  EXPECT_EQ(spec.identities.size(), 5u);
  const auto seq = synth_sequence(spec);
  EXPECT_EQ(seq.ground_truth.size(), 500u);
  EXPECT_LT(seq.detections.size(), seq.ground_truth.size());
  // distinct clothing per walker
  std::set<std::pair<std::array<double, 3>, std::array<double, 3>>> clothes;
  for (const auto& id : spec.identities) clothes.insert({id.upper, id.lower});
  EXPECT_EQ(clothes.size(), spec.identities.size());
}

TEST(Synth, PatchesStayInUnitRange) {
  const auto seq = synth_sequence(SynthSpec::benchmark(2));
  for (const auto& d : seq.detections) {
    for (double v : d.image->pixels) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

}  // namespace
}  // namespace selftrack
