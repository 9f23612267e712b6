#include "selftrack/match_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace selftrack {

namespace {

std::pair<NodeId, NodeId> key(NodeId a, NodeId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

void MatchTable::set(NodeId a, NodeId b, double iou) {
  if (a == b) throw std::invalid_argument("match table entry pairs detection " + std::to_string(a) + " with itself");
  if (!(iou >= 0.0 && iou <= 1.0)) throw std::invalid_argument("match table IoU must lie in [0, 1]");
  entries_[key(a, b)] = iou;
}

double MatchTable::get(NodeId a, NodeId b) const {
  const auto it = entries_.find(key(a, b));
  return it == entries_.end() ? 0.0 : it->second;
}

bool MatchTable::contains(NodeId a, NodeId b) const { return entries_.count(key(a, b)) != 0; }

MatchTable match_table_from_boxes(std::span<const Detection> detections, int max_frame_gap) {
  std::map<int, std::vector<NodeId>> by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) by_frame[detections[i].frame].push_back(static_cast<NodeId>(i));
  MatchTable table;
  for (const auto& [frame, nodes] : by_frame) {
    for (int gap = 1; gap <= max_frame_gap; ++gap) {
      const auto it = by_frame.find(frame + gap);
      if (it == by_frame.end()) continue;
      for (NodeId a : nodes) {
        for (NodeId b : it->second) table.set(a, b, iou(detections[a].box, detections[b].box));
      }
    }
  }
  return table;
}

std::vector<DetectionKey> detection_keys(std::span<const Detection> detections) {
  std::map<int, int> next;
  std::vector<DetectionKey> keys;
  keys.reserve(detections.size());
  for (const auto& d : detections) keys.push_back({d.frame, next[d.frame]++});
  return keys;
}

MatchTable read_match_table(std::istream& in, std::span<const Detection> detections) {
  std::map<DetectionKey, NodeId> lookup;
  const auto keys = detection_keys(detections);
  for (std::size_t i = 0; i < keys.size(); ++i) lookup[keys[i]] = static_cast<NodeId>(i);

  MatchTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    DetectionKey a;
    DetectionKey b;
    double value = 0.0;
    const auto where = "match table line " + std::to_string(line_no);
    std::string rest;
    if (!(fields >> a.frame >> a.index >> b.frame >> b.index >> value) || (fields >> rest)) {
      throw std::runtime_error(where + ": expected 'frame_a idx_a frame_b idx_b iou'");
    }
    const auto ia = lookup.find(a);
    const auto ib = lookup.find(b);
    if (ia == lookup.end() || ib == lookup.end()) {
      throw std::runtime_error(where + ": refers to a detection that does not exist");
    }
    try {
      table.set(ia->second, ib->second, value);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  return table;
}

MatchTable read_match_table_file(const std::filesystem::path& path, std::span<const Detection> detections) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open match table " + path.string());
  return read_match_table(in, detections);
}

void write_match_table(std::ostream& out, const MatchTable& table, std::span<const Detection> detections) {
  const auto keys = detection_keys(detections);
  char buf[64];
  for (const auto& [pair, value] : table.entries()) {
    if (pair.second >= keys.size()) throw std::invalid_argument("match table refers to an unknown detection");
    const auto& a = keys[pair.first];
    const auto& b = keys[pair.second];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out << a.frame << ' ' << a.index << ' ' << b.frame << ' ' << b.index << ' ' << std::string_view(buf, res.ptr)
        << '\n';
  }
}

void write_match_table_file(const std::filesystem::path& path, const MatchTable& table,
                            std::span<const Detection> detections) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_match_table(out, table, detections);
}

}  // namespace selftrack
