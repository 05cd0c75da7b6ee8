// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plain-text box files, one record per line:
//   label file:      class_id cx cy w h
//   detection file:  class_id confidence cx cy w h
// Coordinates are normalized to the frame and written with 6 decimals.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spy/core.hpp"
#include "spy/error.hpp"

namespace spy::io {

struct LabelRecord {
  NormalizedBox box;  // box.class_id is the class
};

struct DetectionRecord {
  NormalizedBox box;
  double confidence = 1.0;
};

inline std::string format_label(const NormalizedBox& n) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", n.class_id, n.cx,
                n.cy, n.w, n.h);
  return buf;
}

inline std::string format_detection(const NormalizedBox& n, double confidence) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f %.6f", n.class_id,
                confidence, n.cx, n.cy, n.w, n.h);
  return buf;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

[[noreturn]] inline void bad_line(const std::filesystem::path& path,
                                  std::size_t lineno, const std::string& why) {
  throw MalformedAnnotation(path.string() + ":" + std::to_string(lineno) +
                            ": " + why);
}

inline void write_lines(const std::filesystem::path& path,
                        const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline std::vector<LabelRecord> read_labels(const std::filesystem::path& path) {
  std::vector<LabelRecord> out;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    std::istringstream ss(lines[i]);
    LabelRecord r;
    std::string extra;
    if (!(ss >> r.box.class_id >> r.box.cx >> r.box.cy >> r.box.w >> r.box.h))
      detail::bad_line(path, i + 1, "expected 'class_id cx cy w h'");
    if (ss >> extra) detail::bad_line(path, i + 1, "trailing fields");
    out.push_back(r);
  }
  return out;
}

inline std::vector<DetectionRecord> read_detections(
    const std::filesystem::path& path) {
  std::vector<DetectionRecord> out;
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    std::istringstream ss(lines[i]);
    DetectionRecord r;
    std::string extra;
    if (!(ss >> r.box.class_id >> r.confidence >> r.box.cx >> r.box.cy >>
          r.box.w >> r.box.h))
      detail::bad_line(path, i + 1, "expected 'class_id confidence cx cy w h'");
    if (ss >> extra) detail::bad_line(path, i + 1, "trailing fields");
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      detail::bad_line(path, i + 1, "confidence outside [0, 1]");
    out.push_back(r);
  }
  return out;
}

inline void write_labels(const std::filesystem::path& path,
                         const std::vector<NormalizedBox>& boxes) {
  std::vector<std::string> lines;
  for (const auto& b : boxes) lines.push_back(format_label(b));
  detail::write_lines(path, lines);
}

inline void write_detections(const std::filesystem::path& path,
                             const std::vector<DetectionRecord>& dets) {
  std::vector<std::string> lines;
  for (const auto& d : dets) lines.push_back(format_detection(d.box, d.confidence));
  detail::write_lines(path, lines);
}

// Pixel-space helpers. Class ids follow the enum values of Label.
template <DetectionLabel Label>
std::vector<Detection<Label>> to_pixel_detections(
    const std::vector<DetectionRecord>& recs, int width, int height) {
  std::vector<Detection<Label>> out;
  const int max_id = std::is_same_v<Label, ShapeClass> ? 3 : 5;
  for (const auto& r : recs) {
    if (r.box.class_id < 0 || r.box.class_id > max_id)
      throw MalformedAnnotation("class id " + std::to_string(r.box.class_id) +
                                " out of range");
    out.push_back({normalized_to_pixel(r.box, width, height),
                   static_cast<Label>(r.box.class_id), r.confidence});
  }
  return out;
}

template <DetectionLabel Label>
std::vector<DetectionRecord> to_records(const std::vector<Detection<Label>>& dets,
                                        int width, int height) {
  std::vector<DetectionRecord> out;
  for (const auto& d : dets)
    out.push_back({pixel_to_normalized(d.box, static_cast<int>(d.label), width,
                                       height),
                   d.confidence});
  return out;
}

// Ground truth as confidence-1 detections.
template <DetectionLabel Label>
std::vector<Detection<Label>> labels_to_pixel(const std::vector<LabelRecord>& recs,
                                              int width, int height) {
  std::vector<DetectionRecord> d;
  for (const auto& r : recs) d.push_back({r.box, 1.0});
  return to_pixel_detections<Label>(d, width, height);
}

// stem -> path for every regular file with the given extension.
inline std::map<std::string, std::filesystem::path> files_by_stem(
    const std::filesystem::path& dir, const std::string& ext) {
  std::map<std::string, std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir))
    throw IoError("not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext)
      out[e.path().stem().string()] = e.path();
  return out;
}

}  // namespace spy::io
