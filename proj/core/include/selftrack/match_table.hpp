#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "selftrack/geometry.hpp"
#include "selftrack/graph.hpp"

namespace selftrack {

/// Symmetric IoU_DM lookup between detections (dense ids); absent pairs read 0.
class MatchTable {
 public:
  /// Throws std::invalid_argument for a self pair or a value outside [0, 1].
  void set(NodeId a, NodeId b, double iou);
  double get(NodeId a, NodeId b) const;
  bool contains(NodeId a, NodeId b) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Canonical (smaller id, larger id) keys.
  const std::map<std::pair<NodeId, NodeId>, double>& entries() const { return entries_; }

 private:
  std::map<std::pair<NodeId, NodeId>, double> entries_;
};

/// Fallback estimator: box IoU for every pair of detections at frame
/// distance 1..max_frame_gap.
MatchTable match_table_from_boxes(std::span<const Detection> detections, int max_frame_gap = 5);

/// (frame, index within frame) for every detection, in list order.
struct DetectionKey {
  int frame = 0;
  int index = 0;

  friend auto operator<=>(const DetectionKey&, const DetectionKey&) = default;
};

std::vector<DetectionKey> detection_keys(std::span<const Detection> detections);

/// Text format: one "frame_a idx_a frame_b idx_b iou" line per pair; '#'
/// starts a comment. Unknown detections and bad values are errors naming the
/// line.
MatchTable read_match_table(std::istream& in, std::span<const Detection> detections);
MatchTable read_match_table_file(const std::filesystem::path& path, std::span<const Detection> detections);
void write_match_table(std::ostream& out, const MatchTable& table, std::span<const Detection> detections);
void write_match_table_file(const std::filesystem::path& path, const MatchTable& table,
                            std::span<const Detection> detections);

}  // namespace selftrack
