#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selftrack/autoencoder.hpp"

namespace selftrack {

/// Lambda takes `lambda` from `epoch` onwards (until the next step).
struct LambdaStep {
  int epoch = 0;
  double lambda = 0.0;

  friend bool operator==(const LambdaStep&, const LambdaStep&) = default;
};

struct TrainingConfig {
  std::vector<LambdaStep> lambda_schedule{{0, 0.0}};
  double learning_rate = 0.001;
  /// alpha(t) = learning_rate * 10^(-t / epochs) when set, constant otherwise.
  bool exponential_decay = true;
  int epochs = 20;
  std::uint64_t seed = 0;
  /// Rescale each step's gradient to at most this global L2 norm (0 = off).
  double gradient_clip = 0.0;
  /// Early stop once the final lambda is active and the epoch loss has not
  /// improved by `plateau_tolerance` (relative) for this many epochs. 0 = off.
  int plateau_patience = 0;
  double plateau_tolerance = 1e-3;

  void validate() const;
  double lambda_at(int epoch) const;
  double learning_rate_at(int epoch) const;

  /// lambda 0 for the first `warmup` epochs, then `lambda`.
  static TrainingConfig two_phase(int epochs, int warmup, double lambda, std::uint64_t seed);
};

struct EpochStats {
  int epoch = 0;
  double lambda = 0.0;
  double learning_rate = 0.0;
  /// Per-sample means over the epoch's training batches.
  LossTerms loss;
  /// Mean ||f(x) - c|| over the dataset after the epoch (inference mode),
  /// using centroids of the post-epoch latents.
  double mean_centroid_distance = 0.0;
};

struct TrainingResult {
  std::vector<EpochStats> trace;
  bool stopped_on_plateau = false;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain SGD on combined_loss with one batch per frame, frames visited in a
/// seeded random order every epoch. While lambda > 0, centroids are
/// recomputed from the current model at the start of each epoch.
///
/// `frames` and `labels` are index-aligned with `dataset`. Throws
/// TrainingDiverged when a loss or parameter becomes non-finite.
TrainingResult train(AutoEncoderModel& model, std::span<const ImagePatch> dataset, std::span<const int> frames,
                     std::span<const long> labels, const TrainingConfig& config);

/// Mean ||f(x_i) - c(label_i)|| over a dataset.
double mean_centroid_distance(const AutoEncoderModel& model, std::span<const ImagePatch> dataset,
                              std::span<const long> labels, const CentroidTable& centroids);

struct GradientCheckOptions {
  double step = 1e-4;
  /// Parameters sampled per tensor (all of them when the tensor is smaller).
  std::size_t samples_per_tensor = 16;
  std::uint64_t seed = 0;
  /// Batchnorm uses batch statistics when set.
  bool training = true;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::map<LayerKind, double> max_error_by_layer;
  std::size_t checked = 0;
  /// Parameters whose finite-difference probe crossed a relu/maxpool kink.
  std::size_t skipped = 0;
};

/// Compares backprop gradients of combined_loss against central differences.
/// Error per parameter is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(AutoEncoderModel& model, std::span<const ImagePatch> batch,
                                   std::span<const long> labels, const CentroidTable& centroids, double lambda,
                                   const GradientCheckOptions& options = {});

}  // namespace selftrack
