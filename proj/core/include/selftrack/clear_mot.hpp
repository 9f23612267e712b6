#pragma once

#include <span>
#include <string>

#include "selftrack/mot_io.hpp"
#include "selftrack/tracks.hpp"

namespace selftrack {

struct MotReport {
  double mota = 0.0;
  /// Mean IoU over matched pairs (0 when nothing matched).
  double motp = 0.0;
  long ids = 0;
  long mt = 0;
  long ml = 0;
  long fp = 0;
  long fn = 0;
  double idf1 = 0.0;
  long matches = 0;
  long gt_boxes = 0;
  long hyp_boxes = 0;
  long gt_tracks = 0;
};

/// CLEAR MOT with IoU >= threshold as the match criterion.
///
/// Per frame, a ground-truth object keeps the hypothesis it was last matched
/// to if that hypothesis is present and still overlaps enough; remaining
/// objects are assigned by maximum total IoU. A match to a hypothesis other
/// than the object's previous one is an identity switch. IDF1 uses the
/// one-to-one GT/hypothesis identity mapping maximizing matched frames.
/// Throws std::invalid_argument on empty ground truth or non-positive GT ids.
MotReport evaluate_clear_mot(std::span<const MotRecord> gt, std::span<const MotRecord> hyp,
                             double iou_threshold = 0.5);
MotReport evaluate_clear_mot(std::span<const MotRecord> gt, const TrackSet& hyp, double iou_threshold = 0.5);

/// Multi-line "MOTA 0.912\n..." summary.
std::string format_report(const MotReport& report);

}  // namespace selftrack
