#include "selftrack/ablation.hpp"

#include <cstdio>

namespace selftrack {

PipelineConfig reconstruction_only(PipelineConfig config) {
  config.training.lambda_schedule = {{0, 0.0}};
  return config;
}

std::vector<AblationRow> run_ablation(std::span<const Detection> detections, const MatchTable& matches,
                                     std::span<const MotRecord> ground_truth, const AblationEmbeddings& embeddings,
                                     const PipelineConfig& base) {
  struct Variant {
    std::string name;
    FeatureSet features;
    const std::vector<LatentVector>* latents;
  };
  const std::vector<Variant> variants{
      {"iou", FeatureSet::iou_only(), &embeddings.with_clustering},
      {"d_AE", FeatureSet::distance_only(), &embeddings.reconstruction_only},
      {"d_AE+C", FeatureSet::distance_only(), &embeddings.with_clustering},
      {"iou+d_AE+iou*d_AE", FeatureSet::combined(), &embeddings.reconstruction_only},
      {"iou+d_AE+C+iou*d_AE+C", FeatureSet::combined(), &embeddings.with_clustering},
  };

  std::vector<AblationRow> rows;
  auto run = [&](const Variant& v, int max_gap, bool lifted) {
    PipelineConfig c = base;
    c.features = v.features;
    c.max_frame_gap = max_gap;
    if (!lifted) c.lifted_gaps.clear();
    const auto models = fit_affinity(detections, matches, *v.latents, c);
    const auto out = run_tracking(detections, matches, *v.latents, models, c);
    rows.push_back({lifted ? v.name + " lift" : v.name, "1-" + std::to_string(max_gap),
                    evaluate_clear_mot(ground_truth, out.tracks)});
  };
  for (int max_gap : {3, 5}) {
    for (const auto& v : variants) run(v, max_gap, false);
  }
  if (!base.lifted_gaps.empty()) run(variants.back(), 5, true);
  return rows;
}

std::string format_ablation(std::span<const AblationRow> rows) {
  std::string out = "features\tdistance\tMOTA\tMOTP\tIDs\tMT\tML\tFP\tFN\n";
  char buf[160];
  for (const auto& r : rows) {
    const auto& m = r.report;
    std::snprintf(buf, sizeof buf, "\t%.3f\t%.3f\t%ld\t%ld\t%ld\t%ld\t%ld\n", m.mota, m.motp, m.ids, m.mt, m.ml, m.fp,
                  m.fn);
    out += r.features + "\t" + r.distance + buf;
  }
  return out;
}

}  // namespace selftrack
