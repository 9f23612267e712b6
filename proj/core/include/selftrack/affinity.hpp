#pragma once

#include <span>
#include <string>
#include <vector>

#include "selftrack/graph.hpp"
#include "selftrack/match_table.hpp"

namespace selftrack {

/// Active edge features. The bias term is always present.
struct FeatureSet {
  bool iou_dm = true;
  bool distance = true;
  bool product = true;

  std::size_t size() const { return 1 + iou_dm + distance + product; }
  /// e.g. "iou+dist+iou*dist"
  std::string name() const;
  /// Inverse of name(); throws std::invalid_argument.
  static FeatureSet parse(const std::string& text);

  static FeatureSet iou_only() { return {true, false, false}; }
  static FeatureSet distance_only() { return {false, true, false}; }
  static FeatureSet combined() { return {true, true, true}; }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Raw per-edge cues: IoU_DM and the latent distance d_AE.
struct PairCues {
  double iou_dm = 0.0;
  double distance = 0.0;
};

/// Feature vector (1, [iou], [d], [iou*d]) in that order.
std::vector<double> make_features(const FeatureSet& set, const PairCues& cues);

struct AffinityConfig {
  double t_low = 0.1;
  double t_high = 0.7;

  void validate() const;
};

struct AffinityModel {
  FeatureSet features;
  std::vector<double> beta;

  friend bool operator==(const AffinityModel&, const AffinityModel&) = default;
};

struct LabeledPair {
  NodeId a = 0;
  NodeId b = 0;
  int label = 0;  // 1 = same object, 0 = different
};

/// IoU_DM > t_high gives 1, IoU_DM < t_low gives 0, anything in between is
/// left out. Emits pairs present in the table in key order.
std::vector<LabeledPair> generate_labels(const MatchTable& table, const AffinityConfig& config);

/// Label for a single IoU_DM value, or -1 inside the dead zone.
int label_for(double iou_dm, const AffinityConfig& config);

struct LogisticOptions {
  double l2 = 1e-4;
  int max_iterations = 100;
  /// Stop once the Newton decrement falls below this.
  double tolerance = 1e-12;
};

struct LogisticFit {
  AffinityModel model;
  /// Regularized mean negative log-likelihood after each iteration (first
  /// entry is the starting point beta = 0).
  std::vector<double> loss_trace;
};

/// Maximizes the L2-regularized mean log-likelihood (bias not penalized)
/// with damped Newton steps and backtracking, so the loss never increases.
/// Throws std::invalid_argument when either class is missing or the feature
/// vectors do not match `set`.
LogisticFit fit_logistic(std::span<const std::vector<double>> features, std::span<const int> labels,
                         const FeatureSet& set, const LogisticOptions& options = {});

double sigmoid(double t);
double logit(double p);

/// sigmoid(<beta, f>); throws std::invalid_argument on a dimension mismatch.
double predict_p_same(const AffinityModel& model, std::span<const double> features);
double predict_p_same(const AffinityModel& model, const PairCues& cues);

inline constexpr double kProbabilityClamp = 1e-6;

/// logit(p) with p clamped to [eps, 1 - eps]; positive favours joining.
double edge_cost(double p_same, double epsilon = kProbabilityClamp);

/// Costs every edge: regular edges between detections of one frame get
/// logit(eps); other regular edges use `nearby`, lifted edges use `lifted`.
/// `regular_cues` / `lifted_cues` are index-aligned with the edge lists.
MulticutInstance assemble_costs(const MulticutInstance& instance, std::span<const int> frames,
                                const AffinityModel& nearby, const AffinityModel& lifted,
                                std::span<const PairCues> regular_cues, std::span<const PairCues> lifted_cues,
                                double epsilon = kProbabilityClamp);

}  // namespace selftrack
