#include "selftrack/clear_mot.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

#include "selftrack/assignment.hpp"

namespace selftrack {

namespace {

struct FrameBoxes {
  std::vector<long> ids;
  std::vector<BBox> boxes;
};

std::map<int, FrameBoxes> by_frame(std::span<const MotRecord> records) {
  std::map<int, FrameBoxes> out;
  for (const auto& r : records) {
    auto& f = out[r.frame];
    f.ids.push_back(r.id);
    f.boxes.push_back(r.box);
  }
  return out;
}

}  // namespace

MotReport evaluate_clear_mot(std::span<const MotRecord> gt, std::span<const MotRecord> hyp, double iou_threshold) {
  if (gt.empty()) throw std::invalid_argument("evaluation needs non-empty ground truth");
  for (const auto& r : gt) {
    if (r.id <= 0) throw std::invalid_argument("ground-truth ids must be positive (frame " + std::to_string(r.frame) + ")");
  }
  const auto gt_frames = by_frame(gt);
  const auto hyp_frames = by_frame(hyp);

  std::set<int> frames;
  for (const auto& [f, _] : gt_frames) frames.insert(f);
  for (const auto& [f, _] : hyp_frames) frames.insert(f);

  MotReport report;
  report.gt_boxes = static_cast<long>(gt.size());
  report.hyp_boxes = static_cast<long>(hyp.size());

  std::map<long, long> last_match;  // gt id -> hyp id
  std::map<long, long> gt_length;
  std::map<long, long> gt_matched;
  std::map<std::pair<long, long>, long> pair_frames;  // for IDF1
  std::map<long, long> hyp_length;
  double iou_sum = 0.0;
  const FrameBoxes empty;

  for (int frame : frames) {
    const auto git = gt_frames.find(frame);
    const auto hit = hyp_frames.find(frame);
    const FrameBoxes& g = git == gt_frames.end() ? empty : git->second;
    const FrameBoxes& h = hit == hyp_frames.end() ? empty : hit->second;
    const int ng = static_cast<int>(g.ids.size());
    const int nh = static_cast<int>(h.ids.size());

    std::vector<double> overlap(static_cast<std::size_t>(ng) * nh, 0.0);
    for (int i = 0; i < ng; ++i) {
      ++gt_length[g.ids[i]];
      for (int j = 0; j < nh; ++j) {
        const double v = iou(g.boxes[i], h.boxes[j]);
        overlap[static_cast<std::size_t>(i) * nh + j] = v;
        if (v >= iou_threshold) ++pair_frames[{g.ids[i], h.ids[j]}];
      }
    }
    for (int j = 0; j < nh; ++j) ++hyp_length[h.ids[j]];

    std::vector<int> match(ng, -1);
    std::vector<char> hyp_used(nh, 0);
    // keep previous pairings that are still valid
    for (int i = 0; i < ng; ++i) {
      const auto prev = last_match.find(g.ids[i]);
      if (prev == last_match.end()) continue;
      for (int j = 0; j < nh; ++j) {
        if (!hyp_used[j] && h.ids[j] == prev->second && overlap[static_cast<std::size_t>(i) * nh + j] >= iou_threshold) {
          match[i] = j;
          hyp_used[j] = 1;
          break;
        }
      }
    }
    std::vector<int> free_g;
    std::vector<int> free_h;
    for (int i = 0; i < ng; ++i) {
      if (match[i] < 0) free_g.push_back(i);
    }
    for (int j = 0; j < nh; ++j) {
      if (!hyp_used[j]) free_h.push_back(j);
    }
    if (!free_g.empty() && !free_h.empty()) {
      const int rows = static_cast<int>(free_g.size());
      const int cols = static_cast<int>(free_h.size());
      std::vector<double> weight(static_cast<std::size_t>(rows) * cols, 0.0);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const double v = overlap[static_cast<std::size_t>(free_g[r]) * nh + free_h[c]];
          weight[static_cast<std::size_t>(r) * cols + c] = v >= iou_threshold ? v : 0.0;
        }
      }
      const auto assigned = max_weight_matching(weight, rows, cols);
      for (int r = 0; r < rows; ++r) {
        if (assigned[r] < 0) continue;
        const int i = free_g[r];
        const int j = free_h[assigned[r]];
        match[i] = j;
        hyp_used[j] = 1;
        const auto prev = last_match.find(g.ids[i]);
        if (prev != last_match.end() && prev->second != h.ids[j]) ++report.ids;
      }
    }
    for (int i = 0; i < ng; ++i) {
      if (match[i] < 0) {
        ++report.fn;
        continue;
      }
      const int j = match[i];
      ++report.matches;
      ++gt_matched[g.ids[i]];
      iou_sum += overlap[static_cast<std::size_t>(i) * nh + j];
      last_match[g.ids[i]] = h.ids[j];
    }
    for (int j = 0; j < nh; ++j) {
      if (!hyp_used[j]) ++report.fp;
    }
  }

  report.mota = 1.0 - static_cast<double>(report.fn + report.fp + report.ids) / static_cast<double>(report.gt_boxes);
  report.motp = report.matches > 0 ? iou_sum / static_cast<double>(report.matches) : 0.0;
  report.gt_tracks = static_cast<long>(gt_length.size());
  for (const auto& [id, length] : gt_length) {
    const double coverage = static_cast<double>(gt_matched[id]) / static_cast<double>(length);
    if (coverage >= 0.8) ++report.mt;
    if (coverage <= 0.2) ++report.ml;
  }

  // IDF1: best one-to-one identity mapping by number of co-detected frames
  std::vector<long> gt_ids;
  std::vector<long> hyp_ids;
  for (const auto& [id, _] : gt_length) gt_ids.push_back(id);
  for (const auto& [id, _] : hyp_length) hyp_ids.push_back(id);
  long idtp = 0;
  if (!hyp_ids.empty()) {
    const int rows = static_cast<int>(gt_ids.size());
    const int cols = static_cast<int>(hyp_ids.size());
    std::vector<double> weight(static_cast<std::size_t>(rows) * cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const auto it = pair_frames.find({gt_ids[r], hyp_ids[c]});
        if (it != pair_frames.end()) weight[static_cast<std::size_t>(r) * cols + c] = static_cast<double>(it->second);
      }
    }
    const auto assigned = max_weight_matching(weight, rows, cols);
    for (int r = 0; r < rows; ++r) {
      if (assigned[r] >= 0) idtp += static_cast<long>(weight[static_cast<std::size_t>(r) * cols + assigned[r]]);
    }
  }
  report.idf1 = 2.0 * static_cast<double>(idtp) / static_cast<double>(report.gt_boxes + report.hyp_boxes);
  return report;
}

MotReport evaluate_clear_mot(std::span<const MotRecord> gt, const TrackSet& hyp, double iou_threshold) {
  const auto records = to_records(hyp);
  return evaluate_clear_mot(gt, records, iou_threshold);
}

std::string format_report(const MotReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "MOTA %.3f\nMOTP %.3f\nIDF1 %.3f\nIDs %ld\nMT %ld\nML %ld\nFP %ld\nFN %ld\nGT %ld\nGT_tracks %ld\n",
                r.mota, r.motp, r.idf1, r.ids, r.mt, r.ml, r.fp, r.fn, r.gt_boxes, r.gt_tracks);
  return buf;
}

}  // namespace selftrack
