// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "spy/core.hpp"
#include "spy/error.hpp"

namespace spy::fusion {

enum class BodySource { DataDriven, Context };

inline std::string_view to_string(BodySource b) {
  return b == BodySource::DataDriven ? "data_driven" : "context";
}

inline BodySource body_source_from_string(std::string_view s) {
  if (s == "data_driven") return BodySource::DataDriven;
  if (s == "context") return BodySource::Context;
  throw ConfigError("fusion.body_source must be data_driven or context, got '" +
                    std::string(s) + "'");
}

struct FusionConfig {
  double iou_threshold = 0.5;
  BodySource body_source = BodySource::DataDriven;

  void validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
      throw ConfigError("fusion.iou_threshold must be in (0, 1]");
  }
};

// Confidence-weighted average of two boxes' centers and sizes. Equal weights
// when both confidences are zero. Ties on class go to `a`.
inline ComponentDetection merge_pair(const ComponentDetection& a,
                                     const ComponentDetection& b) {
  const double sum = a.confidence + b.confidence;
  const double wa = sum > 0.0 ? a.confidence / sum : 0.5;
  const double wb = 1.0 - wa;
  const double cx = wa * a.box.center_x() + wb * b.box.center_x();
  const double cy = wa * a.box.center_y() + wb * b.box.center_y();
  const double w = wa * a.box.width() + wb * b.box.width();
  const double h = wa * a.box.height() + wb * b.box.height();
  const auto edge = [](double v) { return static_cast<int>(std::lround(v)); };
  ComponentDetection out;
  out.box = {edge(cx - w / 2), edge(cy - h / 2), edge(cx + w / 2), edge(cy + h / 2)};
  out.label = b.confidence > a.confidence ? b.label : a.label;
  out.confidence = (a.confidence + b.confidence) / 2.0;
  return out;
}

// Combines a data-driven detector's boxes with the context-based ones.
//   1. Body comes from `body_source` only; the other side's Body boxes are
//      dropped and the kept ones pass through unpaired.
//   2. Remaining cross-detector pairs with IoU > threshold are merged greedily
//      in descending IoU order, each box at most once.
//   3. Unpaired boxes pass through unchanged.
// Output: data-driven list in input order (merged where paired), then the
// unpaired context boxes in input order.
inline std::vector<ComponentDetection> fuse(const std::vector<ComponentDetection>& yolo,
                                            const std::vector<ComponentDetection>& spy,
                                            const FusionConfig& cfg = {}) {
  cfg.validate();
  const auto is_body = [](const ComponentDetection& d) {
    return d.label == ComponentClass::Body;
  };
  const bool yolo_owns_body = cfg.body_source == BodySource::DataDriven;

  std::vector<bool> keep_y(yolo.size(), true), keep_s(spy.size(), true);
  std::vector<bool> pairable_y(yolo.size(), true), pairable_s(spy.size(), true);
  for (std::size_t i = 0; i < yolo.size(); ++i)
    if (is_body(yolo[i])) {
      keep_y[i] = yolo_owns_body;
      pairable_y[i] = false;
    }
  for (std::size_t j = 0; j < spy.size(); ++j)
    if (is_body(spy[j])) {
      keep_s[j] = !yolo_owns_body;
      pairable_s[j] = false;
    }

  struct Candidate {
    double iou;
    std::size_t i, j;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < yolo.size(); ++i) {
    if (!pairable_y[i]) continue;
    for (std::size_t j = 0; j < spy.size(); ++j) {
      if (!pairable_s[j]) continue;
      const double v = iou(yolo[i].box, spy[j].box);
      if (v > cfg.iou_threshold) cands.push_back({v, i, j});
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.iou > b.iou; });

  std::vector<long> partner(yolo.size(), -1);
  std::vector<bool> used_s(spy.size(), false);
  for (const auto& c : cands) {
    if (partner[c.i] >= 0 || used_s[c.j]) continue;
    partner[c.i] = static_cast<long>(c.j);
    used_s[c.j] = true;
  }

  std::vector<ComponentDetection> out;
  for (std::size_t i = 0; i < yolo.size(); ++i) {
    if (!keep_y[i]) continue;
    out.push_back(partner[i] >= 0 ? merge_pair(yolo[i], spy[partner[i]]) : yolo[i]);
  }
  for (std::size_t j = 0; j < spy.size(); ++j)
    if (keep_s[j] && !used_s[j]) out.push_back(spy[j]);
  return out;
}

}  // namespace spy::fusion
