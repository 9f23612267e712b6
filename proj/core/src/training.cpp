#include "selftrack/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace selftrack {

void TrainingConfig::validate() const {
  if (epochs <= 0) throw std::invalid_argument("training: epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("training: learning_rate must be positive");
  }
  if (lambda_schedule.empty()) throw std::invalid_argument("training: lambda_schedule is empty");
  for (std::size_t i = 0; i < lambda_schedule.size(); ++i) {
    const auto& step = lambda_schedule[i];
    if (!(step.lambda >= 0.0 && step.lambda <= 1.0)) throw std::invalid_argument("training: lambda must lie in [0, 1]");
    if (step.epoch < 0) throw std::invalid_argument("training: schedule epochs must be non-negative");
    if (i > 0 && step.epoch <= lambda_schedule[i - 1].epoch) {
      throw std::invalid_argument("training: schedule epochs must be strictly increasing");
    }
  }
  if (gradient_clip < 0.0) throw std::invalid_argument("training: gradient_clip must be non-negative");
  if (plateau_patience < 0) throw std::invalid_argument("training: plateau_patience must be non-negative");
}

double TrainingConfig::lambda_at(int epoch) const {
  double lambda = 0.0;
  for (const auto& step : lambda_schedule) {
    if (step.epoch <= epoch) lambda = step.lambda;
  }
  return lambda;
}

double TrainingConfig::learning_rate_at(int epoch) const {
  if (!exponential_decay) return learning_rate;
  return learning_rate * std::pow(10.0, -static_cast<double>(epoch) / epochs);
}

TrainingConfig TrainingConfig::two_phase(int epochs, int warmup, double lambda, std::uint64_t seed) {
  TrainingConfig c;
  c.epochs = epochs;
  c.seed = seed;
  c.lambda_schedule = {{0, 0.0}};
  if (lambda > 0.0) c.lambda_schedule.push_back({warmup, lambda});
  return c;
}

double mean_centroid_distance(const AutoEncoderModel& model, std::span<const ImagePatch> dataset,
                              std::span<const long> labels, const CentroidTable& centroids) {
  if (dataset.empty()) return 0.0;
  const auto latents = model.encode_all(dataset);
  double sum = 0.0;
  for (std::size_t i = 0; i < latents.size(); ++i) sum += euclidean_distance(latents[i], centroids.at(labels[i]));
  return sum / static_cast<double>(latents.size());
}

namespace {

bool all_finite(AutoEncoderModel& model) {
  for (const auto& view : model.parameters()) {
    for (double v : view.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

TrainingResult train(AutoEncoderModel& model, std::span<const ImagePatch> dataset, std::span<const int> frames,
                     std::span<const long> labels, const TrainingConfig& config) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("training: empty dataset");
  if (frames.size() != dataset.size() || labels.size() != dataset.size()) {
    throw std::invalid_argument("training: frames and labels must align with the dataset");
  }

  std::map<int, std::vector<std::size_t>> by_frame;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_frame[frames[i]].push_back(i);
  std::vector<const std::vector<std::size_t>*> batches;
  for (const auto& [frame, members] : by_frame) batches.push_back(&members);

  std::mt19937_64 rng(config.seed);
  const double final_lambda = config.lambda_schedule.back().lambda;
  const int final_epoch = config.lambda_schedule.back().epoch;

  TrainingResult result;
  CentroidTable centroids;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;

  std::vector<const ImagePatch*> batch;
  std::vector<const LatentVector*> targets;
  auto views = model.parameters();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lambda = config.lambda_at(epoch);
    const double rate = config.learning_rate_at(epoch);
    if (lambda > 0.0) centroids = compute_centroids(model, dataset, labels);

    std::shuffle(batches.begin(), batches.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    stats.lambda = lambda;
    stats.learning_rate = rate;

    for (const auto* members : batches) {
      batch.clear();
      targets.clear();
      for (std::size_t i : *members) {
        batch.push_back(&dataset[i]);
        if (lambda > 0.0) targets.push_back(&centroids.at(labels[i]));
      }
      model.zero_gradients();
      const LossTerms terms = evaluate_batch(model, batch, targets, lambda, true, true, true);
      if (!std::isfinite(terms.total)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << " (lambda " << lambda << ", learning rate "
            << rate << ")";
        throw TrainingDiverged(msg.str());
      }
      const double weight = static_cast<double>(members->size());
      stats.loss.total += terms.total * weight;
      stats.loss.reconstruction += terms.reconstruction * weight;
      stats.loss.clustering += terms.clustering * weight;
      double step = rate;
      if (config.gradient_clip > 0.0) {
        double norm = 0.0;
        for (const auto& view : views) {
          if (!view.trainable) continue;
          for (double g : view.gradients) norm += g * g;
        }
        norm = std::sqrt(norm);
        if (norm > config.gradient_clip) step *= config.gradient_clip / norm;
      }
      for (auto& view : views) {
        if (!view.trainable) continue;
        for (std::size_t k = 0; k < view.values.size(); ++k) view.values[k] -= step * view.gradients[k];
      }
    }
    if (!all_finite(model)) {
      throw TrainingDiverged("training diverged: non-finite parameter after epoch " + std::to_string(epoch));
    }
    const double inv = 1.0 / static_cast<double>(dataset.size());
    stats.loss.total *= inv;
    stats.loss.reconstruction *= inv;
    stats.loss.clustering *= inv;
    {
      const auto latents = model.encode_all(dataset);
      const CentroidTable current = compute_centroids(latents, labels);
      double sum = 0.0;
      for (std::size_t i = 0; i < latents.size(); ++i) sum += euclidean_distance(latents[i], current.at(labels[i]));
      stats.mean_centroid_distance = sum * inv;
    }
    model.set_epoch(epoch + 1);
    result.trace.push_back(stats);

    if (config.plateau_patience > 0 && epoch >= final_epoch && lambda == final_lambda) {
      if (stats.loss.total < best_loss * (1.0 - config.plateau_tolerance)) {
        best_loss = stats.loss.total;
        stale = 0;
      } else if (++stale >= config.plateau_patience) {
        result.stopped_on_plateau = true;
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

// Below this magnitude gradients are compared absolutely; e.g. conv biases
// feeding a batchnorm have an exact zero gradient and only roundoff remains.
constexpr double kGradientFloor = 1e-6;

std::uint64_t branch_signature(const AutoEncoderModel& model, const Tensor& x, bool training) {
  Sequential::Trace enc;
  Sequential::Trace dec;
  model.encoder().forward(x, enc, training);
  model.decoder().forward(enc.activations.back(), dec, training);
  std::uint64_t hash = 1469598103934665603ULL;
  for (std::size_t i = 0; i < model.encoder().size(); ++i) model.encoder().layer(i).mix_branch_signature(enc.caches[i], hash);
  for (std::size_t i = 0; i < model.decoder().size(); ++i) model.decoder().layer(i).mix_branch_signature(dec.caches[i], hash);
  return hash;
}

}  // namespace

GradientCheckResult gradient_check(AutoEncoderModel& model, std::span<const ImagePatch> batch,
                                   std::span<const long> labels, const CentroidTable& centroids, double lambda,
                                   const GradientCheckOptions& options) {
  if (batch.empty()) throw std::invalid_argument("gradient check needs a non-empty batch");
  std::vector<const ImagePatch*> images;
  for (const auto& image : batch) images.push_back(&image);
  std::vector<const LatentVector*> targets;
  if (lambda > 0.0) {
    if (labels.size() != batch.size()) throw std::invalid_argument("gradient check: one label per image is required");
    for (long label : labels) targets.push_back(&centroids.at(label));
  }
  const Tensor x = model.to_batch(images);

  model.zero_gradients();
  evaluate_batch(model, images, targets, lambda, options.training, true, false);
  const std::uint64_t base_signature = branch_signature(model, x, options.training);

  auto loss = [&] { return evaluate_batch(model, images, targets, lambda, options.training, false, false).total; };

  GradientCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (auto& view : model.parameters()) {
    if (!view.trainable) continue;
    std::vector<std::size_t> indices(view.values.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (indices.size() > options.samples_per_tensor) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.samples_per_tensor);
    }
    for (std::size_t k : indices) {
      const double original = view.values[k];
      view.values[k] = original + options.step;
      const double plus = loss();
      const bool kink_plus = branch_signature(model, x, options.training) != base_signature;
      view.values[k] = original - options.step;
      const double minus = loss();
      const bool kink_minus = branch_signature(model, x, options.training) != base_signature;
      view.values[k] = original;
      if (kink_plus || kink_minus) {
        ++result.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = view.gradients[k];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), kGradientFloor});
      const double error = std::abs(numeric - analytic) / scale;
      result.max_relative_error = std::max(result.max_relative_error, error);
      auto& per_layer = result.max_error_by_layer[view.layer_kind];
      per_layer = std::max(per_layer, error);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace selftrack
