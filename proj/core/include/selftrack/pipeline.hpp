#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selftrack/affinity.hpp"
#include "selftrack/autoencoder.hpp"
#include "selftrack/graph.hpp"
#include "selftrack/match_table.hpp"
#include "selftrack/tracks.hpp"
#include "selftrack/training.hpp"

namespace selftrack {

/// Error carrying the pipeline stage it came from ("pregroup", "train-embedding", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct Tracklet {
  long label = 0;
  std::vector<NodeId> members;
};

struct PregroupConfig {
  double threshold = 0.7;
  int max_frame_gap = 3;
};

/// Links detections whose IoU_DM exceeds the threshold at frame distance
/// 1..max_frame_gap. Per frame pair each detection keeps at most one link,
/// chosen greedily by decreasing IoU_DM (ties: smaller ids first). Connected
/// components become tracklets, labelled 0.. in order of their smallest member.
std::vector<Tracklet> pregroup(std::span<const Detection> detections, const MatchTable& matches,
                               const PregroupConfig& config = {});

/// Tracklet label of each detection.
std::vector<long> tracklet_labels(std::span<const Tracklet> tracklets, std::size_t num_detections);

/// Drops clusters smaller than `min_cluster_size`, keeps the best-scoring
/// detection per frame (ties: lower id) and fills missing frames by linear
/// interpolation of the box coordinates. Track ids are 1.. in order of the
/// clusters' smallest detection id.
TrackSet clusters_to_tracks(std::span<const Detection> detections, const Partition& partition,
                            int min_cluster_size = 5);

/// 20 epochs, λ 0 then 0.95 from epoch 10, gradient norm clipped at 50 (the
/// summed squared error of a 32x32x3 patch gives large early gradients).
TrainingConfig default_training();

struct PipelineConfig {
  int max_frame_gap = 5;
  std::vector<int> lifted_gaps{10, 20, 30};
  /// Label source for the lifted model: tracklet pairs at the lifted gaps
  /// (true) or the nearby match-table pairs (false).
  bool lifted_tracklet_labels = true;
  /// Lifted edges are kept when their latent distance is at most this quantile
  /// of all candidate lifted distances (1 keeps all).
  double lifted_quantile = 0.9;
  PregroupConfig pregroup;
  int min_cluster_size = 5;
  AffinityConfig affinity;
  FeatureSet features = FeatureSet::combined();
  ArchConfig arch = ArchConfig::desk_default();
  TrainingConfig training = default_training();
  LogisticOptions logistic;
  std::uint64_t seed = 0;

  /// 16x16 patches, 40 epochs with the clustering term from epoch 20 and no
  /// gradient clipping. Pairs with SynthSpec::benchmark.
  static PipelineConfig small_patches(std::uint64_t seed);

  void validate() const;
  bool needs_embedding() const { return features.distance || features.product || !lifted_gaps.empty(); }
};

/// Flat "key = value" text; see docs/formats.md for the keys.
PipelineConfig read_config(std::istream& in);
PipelineConfig read_config_file(const std::filesystem::path& path);
void write_config(std::ostream& out, const PipelineConfig& config);

struct AffinityModels {
  AffinityModel nearby;
  std::optional<AffinityModel> lifted;
};

/// "nearby <features> b0 b1 ..." / "lifted dist b0 b1" lines.
AffinityModels read_affinity(std::istream& in);
AffinityModels read_affinity_file(const std::filesystem::path& path);
void write_affinity(std::ostream& out, const AffinityModels& models);

/// Trains the embedding on tracklet labels from pregroup().
struct EmbeddingRun {
  AutoEncoderModel model;
  TrainingResult training;
  std::vector<long> labels;
};
EmbeddingRun train_embedding(std::span<const Detection> detections, const MatchTable& matches,
                             const PipelineConfig& config);

/// Training pairs for the distance-only lifted model: detection pairs at
/// exactly one of the lifted gaps, labelled 1 when both lie in the same
/// tracklet and 0 when their tracklets are both present in some frame
/// (two simultaneous tracks cannot be one object). Other pairs are skipped.
std::vector<LabeledPair> lifted_training_pairs(std::span<const Detection> detections,
                                               std::span<const Tracklet> tracklets, std::span<const int> gaps);

/// Fits the nearby model (configured features) on pairs at frame distance
/// 1..max_frame_gap labelled by the match-table thresholds. With lifted gaps
/// configured it also fits the distance-only lifted model, on
/// lifted_training_pairs() when both classes occur there and on the nearby
/// pairs otherwise.
AffinityModels fit_affinity(std::span<const Detection> detections, const MatchTable& matches,
                            std::span<const LatentVector> latents, const PipelineConfig& config);

struct TrackingOutput {
  TrackSet tracks;
  Partition partition;
  double objective = 0.0;
  std::size_t regular_edges = 0;
  std::size_t lifted_edges = 0;
};

/// Builds the graph, assigns costs, solves with GAEC + local search and
/// converts clusters to tracks. `latents` may be empty when no configured
/// feature needs the latent distance.
TrackingOutput run_tracking(std::span<const Detection> detections, const MatchTable& matches,
                            std::span<const LatentVector> latents, const AffinityModels& models,
                            const PipelineConfig& config);

/// All stages from raw detections with patches.
struct PipelineOutput {
  std::optional<EmbeddingRun> embedding;
  AffinityModels affinity;
  TrackingOutput tracking;
};
PipelineOutput run_pipeline(std::span<const Detection> detections, const MatchTable& matches,
                            const PipelineConfig& config);

/// Images of all detections; throws when one is missing.
std::vector<ImagePatch> detection_images(std::span<const Detection> detections);

}  // namespace selftrack
