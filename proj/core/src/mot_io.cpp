#include "selftrack/mot_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace selftrack {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_field(std::string_view field, int line_no, const char* name) {
  field = trim(field);
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    // MOT files sometimes write integer columns as "1.0"
    if constexpr (std::is_integral_v<T>) {
      double d = 0.0;
      const auto r2 = std::from_chars(field.data(), field.data() + field.size(), d);
      if (r2.ec == std::errc{} && r2.ptr == field.data() + field.size() && d == static_cast<double>(static_cast<T>(d))) {
        return static_cast<T>(d);
      }
    }
    throw MotFormatError("line " + std::to_string(line_no) + ": invalid " + name + " '" + std::string(field) + "'");
  }
  return value;
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::vector<MotRecord> read_mot(std::istream& in) {
  std::vector<MotRecord> records;
  std::string line;
  int line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    fields.clear();
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      fields.push_back(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 7 || fields.size() > 10) {
      throw MotFormatError("line " + std::to_string(line_no) + ": expected 7-10 fields, found " +
                           std::to_string(fields.size()));
    }
    MotRecord r;
    r.frame = parse_field<int>(fields[0], line_no, "frame");
    r.id = parse_field<long>(fields[1], line_no, "id");
    r.box.left = parse_field<double>(fields[2], line_no, "left");
    r.box.top = parse_field<double>(fields[3], line_no, "top");
    r.box.width = parse_field<double>(fields[4], line_no, "width");
    r.box.height = parse_field<double>(fields[5], line_no, "height");
    r.conf = parse_field<double>(fields[6], line_no, "conf");
    for (std::size_t k = 7; k < fields.size(); ++k) r.world[k - 7] = parse_field<double>(fields[k], line_no, "world");
    if (r.frame < 1) throw MotFormatError("line " + std::to_string(line_no) + ": frame must be >= 1");
    try {
      r.box.validate();
    } catch (const std::invalid_argument& e) {
      throw MotFormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(r);
  }
  return records;
}

std::vector<MotRecord> read_mot_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MotFormatError("cannot open " + path.string());
  try {
    return read_mot(in);
  } catch (const MotFormatError& e) {
    throw MotFormatError(path.string() + ": " + e.what());
  }
}

void write_mot(std::ostream& out, std::span<const MotRecord> records) {
  std::string line;
  for (const auto& r : records) {
    line.clear();
    line += std::to_string(r.frame);
    line += ',';
    line += std::to_string(r.id);
    for (double v : {r.box.left, r.box.top, r.box.width, r.box.height, r.conf, r.world[0], r.world[1], r.world[2]}) {
      line += ',';
      append_number(line, v);
    }
    line += '\n';
    out << line;
  }
}

void write_mot_file(const std::filesystem::path& path, std::span<const MotRecord> records) {
  std::ofstream out(path);
  if (!out) throw MotFormatError("cannot open " + path.string() + " for writing");
  write_mot(out, records);
}

std::vector<MotRecord> to_records(const TrackSet& tracks) {
  std::vector<MotRecord> out;
  out.reserve(tracks.box_count());
  for (const auto& t : tracks.tracks) {
    for (const auto& [frame, box] : t.boxes) out.push_back(MotRecord{frame, t.id, box, 1.0, {-1.0, -1.0, -1.0}});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const MotRecord& a, const MotRecord& b) { return std::tie(a.frame, a.id) < std::tie(b.frame, b.id); });
  return out;
}

void write_tracks_file(const std::filesystem::path& path, const TrackSet& tracks) {
  write_mot_file(path, to_records(tracks));
}

std::vector<Detection> to_detections(std::span<const MotRecord> records) {
  std::vector<Detection> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(Detection{r.frame, r.box, r.conf, std::nullopt});
  return out;
}

std::vector<MotRecord> to_records(std::span<const Detection> detections) {
  std::vector<MotRecord> out;
  out.reserve(detections.size());
  for (const auto& d : detections) out.push_back(MotRecord{d.frame, -1, d.box, d.score, {-1.0, -1.0, -1.0}});
  return out;
}

}  // namespace selftrack
