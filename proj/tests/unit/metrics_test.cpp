#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "selftrack/assignment.hpp"
#include "selftrack/clear_mot.hpp"

namespace selftrack {
namespace {

double assignment_cost(const std::vector<double>& cost, int cols, const std::vector<int>& rows_to_cols) {
  double total = 0.0;
  for (std::size_t r = 0; r < rows_to_cols.size(); ++r) {
    if (rows_to_cols[r] >= 0) total += cost[r * cols + rows_to_cols[r]];
  }
  return total;
}

// every injective map from the smaller side into the larger one
double brute_force_assignment(const std::vector<double>& cost, int rows, int cols) {
  const bool transpose = rows > cols;
  const int small = transpose ? cols : rows;
  const int large = transpose ? rows : cols;
  std::vector<int> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < small; ++i) total += transpose ? cost[perm[i] * cols + i] : cost[i * cols + perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TEST(Assignment, MatchesBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = dim(rng);
    const int cols = dim(rng);
    std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
    for (auto& c : cost) c = u(rng);
    const auto a = min_cost_assignment(cost, rows, cols);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(rows));
    std::vector<int> used;
    for (int c : a) {
      if (c >= 0) used.push_back(c);
    }
    std::sort(used.begin(), used.end());
    EXPECT_EQ(std::adjacent_find(used.begin(), used.end()), used.end());
    EXPECT_EQ(used.size(), static_cast<std::size_t>(std::min(rows, cols)));
    EXPECT_NEAR(assignment_cost(cost, cols, a), brute_force_assignment(cost, rows, cols), 1e-9);
  }
}

TEST(Assignment, MaxWeightSkipsNonPositivePairs) {
  // row 1 only has a zero weight available, so it stays unmatched
  const std::vector<double> w{3.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  const auto m = max_weight_matching(w, 2, 3);
  EXPECT_EQ(m[0], 0);
  EXPECT_EQ(m[1], -1);
}

MotRecord rec(int frame, long id, double left, double top = 0.0) { return {frame, id, BBox{left, top, 10, 20}, 1.0}; }

std::vector<MotRecord> single_track(int frames) {
  std::vector<MotRecord> gt;
  for (int f = 1; f <= frames; ++f) gt.push_back(rec(f, 1, 5.0 * f));
  return gt;
}

TEST(ClearMot, IdenticalHypothesisIsPerfect) {
  std::vector<MotRecord> gt;
  for (int f = 1; f <= 20; ++f) {
    gt.push_back(rec(f, 1, 3.0 * f));
    gt.push_back(rec(f, 2, 200.0 - 3.0 * f, 50.0));
  }
  const auto r = evaluate_clear_mot(gt, gt);
  EXPECT_EQ(r.mota, 1.0);
  EXPECT_EQ(r.motp, 1.0);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.fn, 0);
  EXPECT_EQ(r.mt, 2);
  EXPECT_EQ(r.ml, 0);
  EXPECT_EQ(r.idf1, 1.0);
  EXPECT_EQ(format_report(r).substr(0, 10), "MOTA 1.000");
}

TEST(ClearMot, EmptyHypothesisScoresZero) {
  const auto gt = single_track(10);
  const auto r = evaluate_clear_mot(gt, std::vector<MotRecord>{});
  EXPECT_EQ(r.mota, 0.0);
  EXPECT_EQ(r.fn, 10);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.ml, 1);
}

TEST(ClearMot, SwitchAtFrameSix) {
  const auto gt = single_track(10);
  auto hyp = gt;
  for (auto& h : hyp) h.id = h.frame < 6 ? 7 : 8;
  const auto r = evaluate_clear_mot(gt, hyp);
  EXPECT_EQ(r.ids, 1);
  EXPECT_DOUBLE_EQ(r.mota, 1.0 - 1.0 / 10.0);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.fn, 0);
  EXPECT_DOUBLE_EQ(r.idf1, 0.5);
}

TEST(ClearMot, PersistenceKeepsPreviousMatch) {
  // GT 1 is matched to hypothesis 5 first; in frame 2 hypothesis 6 overlaps
  // better but 5 still clears the threshold, so no switch is counted.
  const std::vector<MotRecord> gt{rec(1, 1, 0.0), rec(2, 1, 0.0)};
  const std::vector<MotRecord> hyp{rec(1, 5, 0.0), {2, 5, BBox{2.0, 0, 10, 20}, 1.0}, {2, 6, BBox{0.5, 0, 10, 20}, 1.0}};
  const auto r = evaluate_clear_mot(gt, hyp);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.fp, 1);
}

TEST(ClearMot, ThresholdDecidesMatches) {
  const std::vector<MotRecord> gt{rec(1, 1, 0.0)};
  const std::vector<MotRecord> shifted{rec(1, 4, 6.0)};  // IoU 4/16 = 0.25
  const auto r = evaluate_clear_mot(gt, shifted);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.fn, 1);
  EXPECT_EQ(evaluate_clear_mot(gt, shifted, 0.2).matches, 1);
}

TEST(ClearMot, InvariantUnderHypothesisRelabeling) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  std::vector<MotRecord> gt;
  std::vector<MotRecord> hyp;
  for (int f = 1; f <= 30; ++f) {
    for (long id = 1; id <= 3; ++id) {
      gt.push_back(rec(f, id, 40.0 * id + f, 0.0));
      if ((f + id) % 7 != 0) hyp.push_back(rec(f, id + (f > 15 && id == 2 ? 10 : 0), 40.0 * id + f + jitter(rng)));
    }
  }
  const auto base = evaluate_clear_mot(gt, hyp);
  auto renamed = hyp;
  for (auto& h : renamed) h.id = 1000 - 3 * h.id;
  const auto r = evaluate_clear_mot(gt, renamed);
  EXPECT_EQ(r.mota, base.mota);
  EXPECT_EQ(r.ids, base.ids);
  EXPECT_EQ(r.idf1, base.idf1);
}

TEST(ClearMot, MotaDropsWithExtraErrors) {
  const auto gt = single_track(10);
  const auto perfect = evaluate_clear_mot(gt, gt).mota;
  auto with_fp = gt;
  with_fp.push_back(rec(3, 9, 300.0));
  auto with_fn = gt;
  with_fn.erase(with_fn.begin() + 4);
  auto with_switch = gt;
  with_switch.back().id = 2;
  EXPECT_LT(evaluate_clear_mot(gt, with_fp).mota, perfect);
  EXPECT_LT(evaluate_clear_mot(gt, with_fn).mota, perfect);
  EXPECT_LT(evaluate_clear_mot(gt, with_switch).mota, perfect);
  auto worse = with_fp;
  worse.push_back(rec(4, 9, 300.0));
  EXPECT_LT(evaluate_clear_mot(gt, worse).mota, evaluate_clear_mot(gt, with_fp).mota);
}

TEST(ClearMot, MostlyTrackedAndLost) {
  const auto gt = single_track(10);
  std::vector<MotRecord> eight(gt.begin(), gt.begin() + 8);
  std::vector<MotRecord> two(gt.begin(), gt.begin() + 2);
  std::vector<MotRecord> five(gt.begin(), gt.begin() + 5);
  EXPECT_EQ(evaluate_clear_mot(gt, eight).mt, 1);
  EXPECT_EQ(evaluate_clear_mot(gt, two).ml, 1);
  const auto mid = evaluate_clear_mot(gt, five);
  EXPECT_EQ(mid.mt + mid.ml, 0);
}

TEST(ClearMot, RejectsBadGroundTruth) {
  EXPECT_THROW(evaluate_clear_mot(std::vector<MotRecord>{}, std::vector<MotRecord>{}), std::invalid_argument);
  EXPECT_THROW(evaluate_clear_mot(std::vector<MotRecord>{rec(1, -1, 0.0)}, std::vector<MotRecord>{}),
               std::invalid_argument);
}

TEST(ClearMot, TrackSetOverloadAgrees) {
  const auto gt = single_track(6);
  TrackSet tracks;
  Track t{3, {}};
  for (const auto& g : gt) t.boxes[g.frame] = g.box;
  tracks.tracks.push_back(t);
  EXPECT_EQ(evaluate_clear_mot(gt, tracks).mota, 1.0);
}

}  // namespace
}  // namespace selftrack
