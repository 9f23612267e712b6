#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "selftrack/geometry.hpp"
#include "selftrack/match_table.hpp"
#include "selftrack/mot_io.hpp"

namespace selftrack {

enum class Motion { Linear, Sinusoidal };

/// How the synthetic match table is scored. BoxIoU is the plain
/// iou(box_a, box_b) estimator. Tracked follows the figure's true motion like
/// a point matcher would: box a is shifted by its identity's displacement,
/// intersected with box b and scaled by the visible fraction of the figure in
/// both frames and by match_decay per extra frame of distance.
enum class MatchSource { BoxIoU, Tracked };

/// One walking figure: head, striped torso and two legs over a static
/// textured background. Positions are box top-left corners in pixels.
struct IdentitySpec {
  long id = 1;
  double x0 = 0.0;
  double y0 = 0.0;
  double vx = 0.0;  // px per frame
  double vy = 0.0;
  double amplitude = 0.0;  // vertical sway for sinusoidal motion
  double period = 40.0;
  double phase = 0.0;
  double width = 40.0;
  double height = 90.0;
  std::array<double, 3> head{0.9, 0.75, 0.6};
  std::array<double, 3> upper{0.8, 0.2, 0.2};
  std::array<double, 3> lower{0.2, 0.2, 0.6};
  double stripe_frequency = 0.0;  // stripes across the torso, cycles per box height
  double stripe_contrast = 0.0;
  int first_frame = 1;  // visible frames (inclusive); 0 = sequence end
  int last_frame = 0;
};

/// Frames in which an identity produces no detection (it stays in the ground truth).
struct OcclusionWindow {
  long id = 1;
  int first = 1;
  int last = 1;
};

struct SynthSpec {
  int frames = 100;
  double scene_width = 640.0;
  double scene_height = 360.0;
  Motion motion = Motion::Linear;
  std::vector<IdentitySpec> identities;
  std::vector<OcclusionWindow> occlusions;
  /// Detector noise: box jitter (std dev in px, relative to box size for
  /// width/height) and score jitter.
  double box_noise = 0.0;
  double score_noise = 0.0;
  /// Per-frame global illumination gain std dev and per-pixel noise std dev.
  double illumination = 0.0;
  double pixel_noise = 0.0;
  /// Walking cycle: legs swing with this many frames per step (0 = static pose).
  double gait_period = 0.0;
  int patch_channels = 3;
  int patch_height = 32;
  int patch_width = 32;
  int match_gap = 5;
  MatchSource match_source = MatchSource::Tracked;
  double match_decay = 0.9;
  /// A detection is dropped when a single nearer figure covers more than this
  /// fraction of its box (values >= 1 disable the rule).
  double occlusion_coverage = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument (zero frames, duplicate ids, bad windows...).
  void validate() const;

  /// `count` identities with seeded random paths and palette colours.
  /// `palette` limits how many distinct torso/leg colours are drawn from.
  static SynthSpec random(int count, int frames, std::uint64_t seed, Motion motion = Motion::Linear, int palette = 6);

  /// Identities walking along shared horizontal lanes, neighbours in a lane
  /// heading towards each other at `speed` px/frame so that they meet and
  /// pass. Lanes alternate direction pairs; colours come from `palette`.
  static SynthSpec crossing(int count, int frames, std::uint64_t seed, double speed = 4.0, int palette = 6);

  /// Five crossing walkers over 100 frames with box, illumination and pixel
  /// noise, a walking gait and 16x16 patches.
  static SynthSpec benchmark(std::uint64_t seed);
};

struct SynthSequence {
  std::vector<MotRecord> ground_truth;
  /// Noisy detections in frame order, each with its rendered patch.
  std::vector<Detection> detections;
  /// Ground-truth identity per detection.
  std::vector<long> identity;
  MatchTable matches;
};

/// Deterministic for a fixed spec (including seed).
SynthSequence synth_sequence(const SynthSpec& spec);

/// Ground-truth box of an identity at a frame.
BBox identity_box(const SynthSpec& spec, const IdentitySpec& identity, int frame);

}  // namespace selftrack
