#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selftrack/geometry.hpp"
#include "selftrack/tracks.hpp"

namespace selftrack {

/// One MOTChallenge CSV row: frame,id,left,top,width,height,conf,x,y,z.
struct MotRecord {
  int frame = 1;
  long id = -1;  // -1 for raw detections
  BBox box;
  double conf = 1.0;
  std::array<double, 3> world{-1.0, -1.0, -1.0};

  friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

class MotFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Accepts 7 to 10 comma separated fields per line (missing world
/// coordinates read as -1). Blank lines are skipped. Errors name the line.
std::vector<MotRecord> read_mot(std::istream& in);
std::vector<MotRecord> read_mot_file(const std::filesystem::path& path);

/// Shortest round-trip formatting of every number, always 10 fields.
void write_mot(std::ostream& out, std::span<const MotRecord> records);
void write_mot_file(const std::filesystem::path& path, std::span<const MotRecord> records);

/// Rows sorted by frame then track id; conf 1.
std::vector<MotRecord> to_records(const TrackSet& tracks);
void write_tracks_file(const std::filesystem::path& path, const TrackSet& tracks);

/// Detections in file order (no image attached).
std::vector<Detection> to_detections(std::span<const MotRecord> records);
std::vector<MotRecord> to_records(std::span<const Detection> detections);

}  // namespace selftrack
