#include "selftrack/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "selftrack/solver.hpp"

namespace selftrack {

std::vector<Tracklet> pregroup(std::span<const Detection> detections, const MatchTable& matches,
                               const PregroupConfig& config) {
  std::map<int, std::vector<NodeId>> by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) by_frame[detections[i].frame].push_back(static_cast<NodeId>(i));

  DisjointSets sets(detections.size());
  struct Candidate {
    double iou;
    NodeId a;
    NodeId b;
  };
  std::vector<Candidate> candidates;
  std::set<NodeId> used_a;
  std::set<NodeId> used_b;
  for (const auto& [frame, nodes] : by_frame) {
    for (int gap = 1; gap <= config.max_frame_gap; ++gap) {
      const auto other = by_frame.find(frame + gap);
      if (other == by_frame.end()) continue;
      candidates.clear();
      for (NodeId a : nodes) {
        for (NodeId b : other->second) {
          const double v = matches.get(a, b);
          if (v > config.threshold) candidates.push_back({v, a, b});
        }
      }
      std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
        if (x.iou != y.iou) return x.iou > y.iou;
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
      });
      used_a.clear();
      used_b.clear();
      for (const auto& c : candidates) {
        if (used_a.count(c.a) || used_b.count(c.b)) continue;
        used_a.insert(c.a);
        used_b.insert(c.b);
        sets.unite(c.a, c.b);
      }
    }
  }

  std::vector<Tracklet> out;
  std::map<std::size_t, std::size_t> root_to_index;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = root_to_index.emplace(root, out.size());
    if (inserted) out.push_back(Tracklet{static_cast<long>(out.size()), {}});
    out[it->second].members.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::vector<long> tracklet_labels(std::span<const Tracklet> tracklets, std::size_t num_detections) {
  std::vector<long> labels(num_detections, -1);
  for (const auto& t : tracklets) {
    for (NodeId m : t.members) {
      if (m >= num_detections || labels[m] != -1) {
        throw std::invalid_argument("tracklets do not partition the detections");
      }
      labels[m] = t.label;
    }
  }
  if (std::find(labels.begin(), labels.end(), -1) != labels.end()) {
    throw std::invalid_argument("tracklets do not cover every detection");
  }
  return labels;
}

TrackSet clusters_to_tracks(std::span<const Detection> detections, const Partition& partition, int min_cluster_size) {
  if (partition.size() != detections.size()) throw std::invalid_argument("partition does not cover the detections");
  TrackSet out;
  long next_id = 1;
  for (const auto& block : partition.blocks()) {
    if (static_cast<int>(block.size()) < min_cluster_size) continue;
    std::map<int, NodeId> best;
    for (NodeId n : block) {
      const auto [it, inserted] = best.emplace(detections[n].frame, n);
      if (!inserted && detections[n].score > detections[it->second].score) it->second = n;
    }
    Track track;
    track.id = next_id++;
    auto prev = best.end();
    for (auto it = best.begin(); it != best.end(); ++it) {
      const BBox& box = detections[it->second].box;
      if (prev != best.end()) {
        const BBox& a = detections[prev->second].box;
        const int f0 = prev->first;
        const int f1 = it->first;
        for (int f = f0 + 1; f < f1; ++f) {
          const double t = static_cast<double>(f - f0) / static_cast<double>(f1 - f0);
          track.boxes[f] = BBox{a.left + t * (box.left - a.left), a.top + t * (box.top - a.top),
                                a.width + t * (box.width - a.width), a.height + t * (box.height - a.height)};
        }
      }
      track.boxes[it->first] = box;
      prev = it;
    }
    out.tracks.push_back(std::move(track));
  }
  return out;
}

TrainingConfig default_training() {
  TrainingConfig t = TrainingConfig::two_phase(20, 10, 0.95, 0);
  t.gradient_clip = 50.0;
  return t;
}

PipelineConfig PipelineConfig::small_patches(std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  c.arch.height = 16;
  c.arch.width = 16;
  c.training = TrainingConfig::two_phase(40, 20, 0.95, seed);
  return c;
}

void PipelineConfig::validate() const {
  if (max_frame_gap < 1) throw std::invalid_argument("max_frame_gap must be at least 1");
  for (int g : lifted_gaps) {
    if (g <= max_frame_gap) throw std::invalid_argument("lifted gaps must exceed max_frame_gap");
  }
  if (!(lifted_quantile > 0.0 && lifted_quantile <= 1.0)) throw std::invalid_argument("lifted_quantile must lie in (0, 1]");
  if (!(pregroup.threshold >= 0.0 && pregroup.threshold <= 1.0)) {
    throw std::invalid_argument("pregroup_threshold must lie in [0, 1]");
  }
  if (pregroup.max_frame_gap < 1) throw std::invalid_argument("pregroup_max_gap must be at least 1");
  if (min_cluster_size < 1) throw std::invalid_argument("min_cluster_size must be at least 1");
  affinity.validate();
  arch.validate();
  training.validate();
  if (!(logistic.l2 >= 0.0)) throw std::invalid_argument("l2 must be non-negative");
}

std::vector<ImagePatch> detection_images(std::span<const Detection> detections) {
  std::vector<ImagePatch> images;
  images.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (!detections[i].image) throw std::invalid_argument("detection " + std::to_string(i) + " has no image patch");
    images.push_back(*detections[i].image);
  }
  return images;
}

EmbeddingRun train_embedding(std::span<const Detection> detections, const MatchTable& matches,
                             const PipelineConfig& config) {
  std::vector<long> labels;
  try {
    labels = tracklet_labels(pregroup(detections, matches, config.pregroup), detections.size());
  } catch (const std::exception& e) {
    throw StageError("pregroup", e.what());
  }
  try {
    const auto images = detection_images(detections);
    std::vector<int> frames;
    frames.reserve(detections.size());
    for (const auto& d : detections) frames.push_back(d.frame);
    AutoEncoderModel model(config.arch, config.seed);
    TrainingConfig training = config.training;
    training.seed = config.seed;
    TrainingResult result = train(model, images, frames, labels, training);
    return EmbeddingRun{std::move(model), std::move(result), std::move(labels)};
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("train-embedding", e.what());
  }
}

namespace {

double cue_distance(std::span<const LatentVector> latents, NodeId a, NodeId b) {
  return latents.empty() ? 0.0 : euclidean_distance(latents[a], latents[b]);
}

void check_latents(std::span<const Detection> detections, std::span<const LatentVector> latents, bool needed,
                   const char* stage) {
  if (needed && latents.size() != detections.size()) {
    throw StageError(stage, "latent distance features need one latent vector per detection (have " +
                                std::to_string(latents.size()) + " for " + std::to_string(detections.size()) +
                                " detections)");
  }
}

}  // namespace

std::vector<LabeledPair> lifted_training_pairs(std::span<const Detection> detections,
                                               std::span<const Tracklet> tracklets, std::span<const int> gaps) {
  const auto labels = tracklet_labels(tracklets, detections.size());
  // frames covered by each tracklet
  std::vector<std::set<int>> frames_of(tracklets.size());
  for (std::size_t i = 0; i < detections.size(); ++i) frames_of[labels[i]].insert(detections[i].frame);
  auto coexist = [&](long a, long b) {
    const auto& fa = frames_of[a];
    const auto& fb = frames_of[b];
    if (fa.empty() || fb.empty() || *fa.rbegin() < *fb.begin() || *fb.rbegin() < *fa.begin()) return false;
    const auto& small = fa.size() < fb.size() ? fa : fb;
    const auto& large = fa.size() < fb.size() ? fb : fa;
    return std::any_of(small.begin(), small.end(), [&](int f) { return large.count(f) != 0; });
  };

  std::map<int, std::vector<NodeId>> by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) by_frame[detections[i].frame].push_back(static_cast<NodeId>(i));
  std::map<std::pair<long, long>, bool> coexist_cache;
  std::vector<LabeledPair> out;
  for (const auto& [frame, nodes] : by_frame) {
    for (int gap : gaps) {
      const auto other = by_frame.find(frame + gap);
      if (other == by_frame.end()) continue;
      for (NodeId a : nodes) {
        for (NodeId b : other->second) {
          const long la = labels[a];
          const long lb = labels[b];
          if (la == lb) {
            out.push_back({std::min(a, b), std::max(a, b), 1});
            continue;
          }
          const auto key = std::minmax(la, lb);
          auto it = coexist_cache.find(key);
          if (it == coexist_cache.end()) it = coexist_cache.emplace(key, coexist(la, lb)).first;
          if (it->second) out.push_back({std::min(a, b), std::max(a, b), 0});
        }
      }
    }
  }
  return out;
}

AffinityModels fit_affinity(std::span<const Detection> detections, const MatchTable& matches,
                            std::span<const LatentVector> latents, const PipelineConfig& config) {
  const bool lifted = !config.lifted_gaps.empty();
  check_latents(detections, latents, config.features.distance || config.features.product || lifted, "fit-affinity");
  try {
    const MulticutInstance graph = build_graph(detections, config.max_frame_gap, {});
    std::vector<std::vector<double>> nearby_features;
    std::vector<std::vector<double>> lifted_features;
    std::vector<int> labels;
    for (const Edge& e : graph.edges()) {
      if (detections[e.u].frame == detections[e.v].frame) continue;
      const PairCues cues{matches.get(e.u, e.v), cue_distance(latents, e.u, e.v)};
      const int label = label_for(cues.iou_dm, config.affinity);
      if (label < 0) continue;
      nearby_features.push_back(make_features(config.features, cues));
      if (lifted) lifted_features.push_back(make_features(FeatureSet::distance_only(), cues));
      labels.push_back(label);
    }
    AffinityModels models;
    models.nearby = fit_logistic(nearby_features, labels, config.features, config.logistic).model;
    if (lifted) {
      if (config.lifted_tracklet_labels) {
        const auto tracklets = pregroup(detections, matches, config.pregroup);
        const auto pairs = lifted_training_pairs(detections, tracklets, config.lifted_gaps);
        const auto positives = std::count_if(pairs.begin(), pairs.end(), [](const LabeledPair& p) { return p.label == 1; });
        if (positives > 0 && positives < static_cast<std::ptrdiff_t>(pairs.size())) {
          lifted_features.clear();
          labels.clear();
          for (const auto& p : pairs) {
            lifted_features.push_back(make_features(FeatureSet::distance_only(), {0.0, cue_distance(latents, p.a, p.b)}));
            labels.push_back(p.label);
          }
        }
      }
      models.lifted = fit_logistic(lifted_features, labels, FeatureSet::distance_only(), config.logistic).model;
    }
    return models;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("fit-affinity", e.what());
  }
}

TrackingOutput run_tracking(std::span<const Detection> detections, const MatchTable& matches,
                            std::span<const LatentVector> latents, const AffinityModels& models,
                            const PipelineConfig& config) {
  const bool lifted = !config.lifted_gaps.empty();
  check_latents(detections, latents, models.nearby.features.distance || models.nearby.features.product || lifted,
                "track");
  if (models.nearby.features != config.features) {
    throw StageError("track", "affinity model uses features '" + models.nearby.features.name() + "' but config asks for '" +
                                  config.features.name() + "'");
  }
  if (lifted && !models.lifted) throw StageError("track", "lifted gaps configured but no lifted affinity model given");

  TrackingOutput out;
  try {
    MulticutInstance graph = build_graph(detections, config.max_frame_gap, config.lifted_gaps);
    std::vector<PairCues> regular;
    regular.reserve(graph.num_edges());
    for (const Edge& e : graph.edges()) regular.push_back({matches.get(e.u, e.v), cue_distance(latents, e.u, e.v)});

    std::vector<Edge> kept;
    std::vector<PairCues> lifted_cues;
    if (graph.num_lifted_edges() > 0) {
      std::vector<double> dist;
      dist.reserve(graph.num_lifted_edges());
      for (const Edge& e : graph.lifted_edges()) dist.push_back(cue_distance(latents, e.u, e.v));
      double gate = std::numeric_limits<double>::infinity();
      if (config.lifted_quantile < 1.0) {
        std::vector<double> sorted = dist;
        const auto k = static_cast<std::size_t>(std::floor(config.lifted_quantile * static_cast<double>(sorted.size() - 1)));
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
        gate = sorted[k];
      }
      for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= gate) {
          kept.push_back(graph.lifted_edges()[i]);
          lifted_cues.push_back({0.0, dist[i]});
        }
      }
      graph = MulticutInstance(graph.num_nodes(), graph.edges(), kept);
    }
    std::vector<int> frames;
    frames.reserve(detections.size());
    for (const auto& d : detections) frames.push_back(d.frame);
    const AffinityModel lifted_model = models.lifted.value_or(AffinityModel{FeatureSet::distance_only(), {0.0, 0.0}});
    const MulticutInstance costed = assemble_costs(graph, frames, models.nearby, lifted_model, regular, lifted_cues);
    const Solution solution = solve_gaec_kl(costed);
    out.partition = solution.partition;
    out.objective = solution.objective;
    out.regular_edges = costed.num_edges();
    out.lifted_edges = costed.num_lifted_edges();
    out.tracks = clusters_to_tracks(detections, solution.partition, config.min_cluster_size);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("track", e.what());
  }
  return out;
}

PipelineOutput run_pipeline(std::span<const Detection> detections, const MatchTable& matches,
                            const PipelineConfig& config) {
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  PipelineOutput out;
  std::vector<LatentVector> latents;
  if (config.needs_embedding() && !detections.empty()) {
    out.embedding = train_embedding(detections, matches, config);
    latents = out.embedding->model.encode_all(detection_images(detections));
  }
  if (detections.empty()) return out;
  out.affinity = fit_affinity(detections, matches, latents, config);
  out.tracking = run_tracking(detections, matches, latents, out.affinity, config);
  return out;
}

}  // namespace selftrack
