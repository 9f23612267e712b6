#pragma once

#include <span>
#include <string>
#include <vector>

#include "selftrack/clear_mot.hpp"
#include "selftrack/pipeline.hpp"

namespace selftrack {

/// One tracking run of the feature grid.
struct AblationRow {
  std::string features;  // e.g. "iou+d_AE+C+iou*d_AE+C lift"
  std::string distance;  // "1-3" or "1-5"
  MotReport report;
};

/// Latents of the same detections under two embeddings: trained with the
/// reconstruction loss only, and with the clustering term added.
struct AblationEmbeddings {
  std::vector<LatentVector> reconstruction_only;
  std::vector<LatentVector> with_clustering;
};

/// Runs the eleven configurations of the feature grid: IoU_DM, d_AE,
/// d_AE+C, and the two IoU_DM + d + IoU_DM*d combinations at maximum frame
/// distance 3 and 5 without lifted edges, then the d_AE+C combination at
/// distance 5 with the configured lifted gaps. Each run fits its own
/// affinity models; everything else comes from `base`.
std::vector<AblationRow> run_ablation(std::span<const Detection> detections, const MatchTable& matches,
                                     std::span<const MotRecord> ground_truth, const AblationEmbeddings& embeddings,
                                     const PipelineConfig& base);

/// Copy of `config` whose training never enables the clustering term.
PipelineConfig reconstruction_only(PipelineConfig config);

/// Header plus one tab-separated line per row:
/// features, distance, MOTA, MOTP, IDs, MT, ML, FP, FN.
std::string format_ablation(std::span<const AblationRow> rows);

}  // namespace selftrack
