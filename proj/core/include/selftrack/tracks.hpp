#pragma once

#include <map>
#include <vector>

#include "selftrack/geometry.hpp"

namespace selftrack {

/// One identity: a box per frame over a contiguous frame range.
struct Track {
  long id = 0;
  std::map<int, BBox> boxes;

  int first_frame() const { return boxes.empty() ? 0 : boxes.begin()->first; }
  int last_frame() const { return boxes.empty() ? 0 : boxes.rbegin()->first; }
  friend bool operator==(const Track&, const Track&) = default;
};

struct TrackSet {
  std::vector<Track> tracks;

  bool empty() const { return tracks.empty(); }
  std::size_t size() const { return tracks.size(); }
  std::size_t box_count() const;
  friend bool operator==(const TrackSet&, const TrackSet&) = default;
};

inline std::size_t TrackSet::box_count() const {
  std::size_t n = 0;
  for (const auto& t : tracks) n += t.boxes.size();
  return n;
}

}  // namespace selftrack
