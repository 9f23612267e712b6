// selftrack command line: one subcommand per pipeline stage.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "selftrack/ablation.hpp"
#include "selftrack/checkpoint.hpp"
#include "selftrack/clear_mot.hpp"
#include "selftrack/mot_io.hpp"
#include "selftrack/patch_io.hpp"
#include "selftrack/pipeline.hpp"
#include "selftrack/solver.hpp"
#include "selftrack/synth.hpp"

namespace fs = std::filesystem;
using namespace selftrack;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

struct SequenceFiles {
  std::string detections;
  std::string patches;
  std::string matches;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config, "pipeline config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "overrides the config seed");
}

void add_sequence(CLI::App* cmd, SequenceFiles& files, bool need_patches) {
  cmd->add_option("--det", files.detections, "detections, MOTChallenge CSV")->required()->check(CLI::ExistingFile);
  auto* patches = cmd->add_option("--patches", files.patches, "patch file aligned with the detection rows");
  patches->check(CLI::ExistingFile);
  if (need_patches) patches->required();
  cmd->add_option("--matches", files.matches, "match table; plain box IoU over the frame window when omitted")
      ->check(CLI::ExistingFile);
}

PipelineConfig load_config(const Common& common) {
  PipelineConfig c = common.config.empty() ? PipelineConfig{} : read_config_file(common.config);
  if (common.seed) {
    c.seed = *common.seed;
    c.training.seed = *common.seed;
  }
  c.validate();
  return c;
}

struct Sequence {
  std::vector<Detection> detections;
  MatchTable matches;
};

Sequence load_sequence(const SequenceFiles& files, const PipelineConfig& config) {
  Sequence s;
  s.detections = to_detections(read_mot_file(files.detections));
  if (!files.patches.empty()) {
    auto patches = read_patches_file(files.patches);
    if (patches.size() != s.detections.size()) {
      throw std::runtime_error(files.patches + " holds " + std::to_string(patches.size()) + " patches for " +
                               std::to_string(s.detections.size()) + " detections");
    }
    for (std::size_t i = 0; i < patches.size(); ++i) s.detections[i].image = std::move(patches[i]);
  }
  s.matches = files.matches.empty() ? match_table_from_boxes(s.detections, config.max_frame_gap)
                                    : read_match_table_file(files.matches, s.detections);
  return s;
}

// The model input follows the patch file.
PipelineConfig fit_arch_to_patches(PipelineConfig c, const std::vector<Detection>& dets) {
  if (!dets.empty() && dets[0].image) {
    c.arch.channels = dets[0].image->channels;
    c.arch.height = dets[0].image->height;
    c.arch.width = dets[0].image->width;
    c.arch.validate();
  }
  return c;
}

std::vector<LatentVector> latents_from(const std::string& model_path, const std::vector<Detection>& dets) {
  if (model_path.empty()) return {};
  const AutoEncoderModel model = load_checkpoint_file(model_path);
  return model.encode_all(detection_images(dets));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string partition_text(const Partition& p) {
  std::string out;
  for (const auto& block : p.blocks()) {
    if (!out.empty()) out += "|";
    out += "{";
    for (std::size_t i = 0; i < block.size(); ++i) out += (i ? "," : "") + std::to_string(block[i]);
    out += "}";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised multiple object tracking with lifted multicuts"};
  app.require_subcommand(1);
  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  add_common(synth, common);
  std::string synth_out;
  std::string scene = "crossing";
  int identities = 5;
  int frames = 100;
  int patch = 16;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--scene", scene, "crossing or random")->check(CLI::IsMember({"crossing", "random"}));
  synth->add_option("--identities", identities)->check(CLI::PositiveNumber);
  synth->add_option("--frames", frames)->check(CLI::PositiveNumber);
  synth->add_option("--patch", patch, "square patch size")->check(CLI::PositiveNumber);

  // pregroup
  auto* pre = app.add_subcommand("pregroup", "group detections into tracklets by IoU_DM");
  add_common(pre, common);
  SequenceFiles pre_files;
  std::string pre_out;
  add_sequence(pre, pre_files, false);
  pre->add_option("--out", pre_out, "detections with tracklet ids (MOT CSV)")->required();

  // train-embedding
  auto* train = app.add_subcommand("train-embedding", "train the autoencoder on tracklet labels");
  add_common(train, common);
  SequenceFiles train_files;
  std::string train_out;
  std::string trace_out;
  add_sequence(train, train_files, true);
  train->add_option("--out", train_out, "checkpoint file")->required();
  train->add_option("--trace", trace_out, "per-epoch loss table (tab separated)");

  // fit-affinity
  auto* fit = app.add_subcommand("fit-affinity", "fit the edge regressors");
  add_common(fit, common);
  SequenceFiles fit_files;
  std::string fit_model;
  std::string fit_out;
  add_sequence(fit, fit_files, false);
  fit->add_option("--model", fit_model, "embedding checkpoint (needed for distance features)")->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "affinity model file")->required();

  // track
  auto* track = app.add_subcommand("track", "solve the lifted multicut and write tracks");
  add_common(track, common);
  SequenceFiles track_files;
  std::string track_model;
  std::string track_affinity;
  std::string track_out;
  add_sequence(track, track_files, false);
  track->add_option("--model", track_model, "embedding checkpoint")->check(CLI::ExistingFile);
  track->add_option("--affinity", track_affinity, "affinity model file")->required()->check(CLI::ExistingFile);
  track->add_option("--out", track_out, "tracks (MOT CSV)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "CLEAR MOT scores of a hypothesis against ground truth");
  add_common(eval, common);
  std::string gt_path;
  std::string hyp_path;
  double threshold = 0.5;
  eval->add_option("--gt", gt_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--hyp", hyp_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--iou", threshold, "match threshold")->check(CLI::Range(0.0, 1.0));

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact minimum of a small instance by enumeration");
  add_common(oracle, common);
  std::string instance_path;
  oracle->add_option("instance", instance_path, "instance text file")->required()->check(CLI::ExistingFile);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "feature grid on one sequence, one row per configuration");
  add_common(ablate, common);
  SequenceFiles ablate_files;
  std::string ablate_gt;
  std::string ae_model;
  std::string aec_model;
  add_sequence(ablate, ablate_files, false);
  ablate->add_option("--gt", ablate_gt, "ground truth (MOT CSV)")->required()->check(CLI::ExistingFile);
  ablate->add_option("--ae-model", ae_model, "checkpoint trained without the clustering term")
      ->check(CLI::ExistingFile);
  ablate->add_option("--aec-model", aec_model, "checkpoint trained with the clustering term")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*synth) {
      const PipelineConfig config = load_config(common);
      SynthSpec spec = scene == "crossing" ? SynthSpec::benchmark(config.seed)
                                           : SynthSpec::random(identities, frames, config.seed);
      if (scene == "crossing" && (identities != 5 || frames != 100)) {
        const SynthSpec base = spec;
        spec = SynthSpec::crossing(identities, frames, config.seed);
        spec.box_noise = base.box_noise;
        spec.illumination = base.illumination;
        spec.pixel_noise = base.pixel_noise;
        spec.gait_period = base.gait_period;
      }
      if (scene == "random") {
        spec.box_noise = 2.0;
        spec.gait_period = 6.0;
      }
      spec.patch_height = patch;
      spec.patch_width = patch;
      spec.match_gap = config.max_frame_gap;
      const auto seq = synth_sequence(spec);
      fs::create_directories(synth_out);
      const fs::path dir(synth_out);
      write_mot_file(dir / "gt.txt", seq.ground_truth);
      write_mot_file(dir / "det.txt", to_records(std::span<const Detection>(seq.detections)));
      write_patches_file(dir / "patches.bin", detection_images(seq.detections));
      write_match_table_file(dir / "matches.txt", seq.matches, seq.detections);
      std::cout << "wrote " << seq.detections.size() << " detections of " << spec.identities.size()
                << " identities over " << spec.frames << " frames to " << dir.string() << "\n";
    } else if (*pre) {
      const PipelineConfig config = load_config(common);
      const auto seq = load_sequence(pre_files, config);
      stage = "pregroup";
      const auto tracklets = pregroup(seq.detections, seq.matches, config.pregroup);
      const auto labels = tracklet_labels(tracklets, seq.detections.size());
      auto records = to_records(std::span<const Detection>(seq.detections));
      for (std::size_t i = 0; i < records.size(); ++i) records[i].id = labels[i] + 1;
      write_mot_file(pre_out, records);
      std::cout << tracklets.size() << " tracklets from " << seq.detections.size() << " detections\n";
    } else if (*train) {
      const PipelineConfig config = load_config(common);
      const auto seq = load_sequence(train_files, config);
      const auto run = train_embedding(seq.detections, seq.matches, fit_arch_to_patches(config, seq.detections));
      save_checkpoint_file(run.model, train_out);
      std::ostringstream trace;
      trace << "epoch\tlambda\tlearning_rate\treconstruction\tclustering\ttotal\tcentroid_distance\n";
      for (const auto& e : run.training.trace) {
        trace << e.epoch << '\t' << e.lambda << '\t' << e.learning_rate << '\t' << e.loss.reconstruction << '\t'
              << e.loss.clustering << '\t' << e.loss.total << '\t' << e.mean_centroid_distance << '\n';
      }
      if (!trace_out.empty()) write_text(trace_out, trace.str());
      const auto& last = run.training.trace.back();
      std::cout << "trained " << run.training.trace.size() << " epochs"
                << (run.training.stopped_on_plateau ? " (stopped on plateau)" : "") << ", final loss "
                << last.loss.total << "\n";
    } else if (*fit) {
      const PipelineConfig config = load_config(common);
      const auto seq = load_sequence(fit_files, config);
      stage = "fit-affinity";
      const auto latents = latents_from(fit_model, seq.detections);
      const auto models = fit_affinity(seq.detections, seq.matches, latents, config);
      std::ostringstream text;
      write_affinity(text, models);
      write_text(fit_out, text.str());
      std::cout << text.str();
    } else if (*track) {
      const PipelineConfig config = load_config(common);
      const auto seq = load_sequence(track_files, config);
      stage = "track";
      const auto latents = latents_from(track_model, seq.detections);
      const auto models = read_affinity_file(track_affinity);
      const auto out = run_tracking(seq.detections, seq.matches, latents, models, config);
      write_tracks_file(track_out, out.tracks);
      std::cout << out.tracks.size() << " tracks, objective " << out.objective << ", " << out.regular_edges
                << " regular and " << out.lifted_edges << " lifted edges\n";
    } else if (*eval) {
      const auto gt = read_mot_file(gt_path);
      const auto hyp = read_mot_file(hyp_path);
      std::cout << format_report(evaluate_clear_mot(gt, hyp, threshold));
    } else if (*oracle) {
      const auto instance = read_instance_file(instance_path);
      const auto best = solve_bruteforce(instance);
      std::cout << "partition " << partition_text(best.partition) << "\nobjective " << best.objective << "\n";
    } else if (*ablate) {
      const PipelineConfig config = load_config(common);
      const auto seq = load_sequence(ablate_files, config);
      const auto gt = read_mot_file(ablate_gt);
      AblationEmbeddings embeddings;
      if (!ae_model.empty() && !aec_model.empty()) {
        embeddings.reconstruction_only = latents_from(ae_model, seq.detections);
        embeddings.with_clustering = latents_from(aec_model, seq.detections);
      } else {
        stage = "train-embedding";
        const auto arch_config = fit_arch_to_patches(config, seq.detections);
        const auto images = detection_images(seq.detections);
        embeddings.reconstruction_only =
            train_embedding(seq.detections, seq.matches, reconstruction_only(arch_config)).model.encode_all(images);
        embeddings.with_clustering = train_embedding(seq.detections, seq.matches, arch_config).model.encode_all(images);
      }
      stage = "ablate";
      std::cout << format_ablation(run_ablation(seq.detections, seq.matches, gt, embeddings, config));
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
