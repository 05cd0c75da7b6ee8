// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "spy/core.hpp"
#include "spy/parallel.hpp"
#include "spy/shapedetect.hpp"

namespace spy::eval {

struct MatchResult {
  std::vector<bool> det_tp;                       // per detection, input order
  std::vector<std::optional<std::size_t>> det_gt;  // matched GT index
  std::vector<bool> gt_matched;
  std::size_t tp = 0, fp = 0, fn = 0;
};

// Detection indices by descending confidence; ties keep input order.
template <DetectionLabel L>
std::vector<std::size_t> confidence_order(const std::vector<Detection<L>>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

// Greedy one-to-one matching. Each detection, in confidence order, takes the
// unmatched GT with the highest IoU >= threshold (lowest index on ties). With
// `class_aware` only same-class GTs are eligible.
template <DetectionLabel L>
MatchResult match_detections(const std::vector<Detection<L>>& dets,
                             const std::vector<Detection<L>>& gts,
                             double iou_threshold = 0.5, bool class_aware = true) {
  MatchResult r;
  r.det_tp.assign(dets.size(), false);
  r.det_gt.assign(dets.size(), std::nullopt);
  r.gt_matched.assign(gts.size(), false);
  for (std::size_t d : confidence_order(dets)) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[g]) continue;
      if (class_aware && gts[g].label != dets[d].label) continue;
      const double v = iou(dets[d].box, gts[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best) {
      r.det_tp[d] = true;
      r.det_gt[d] = best;
      r.gt_matched[*best] = true;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = gts.size() - r.tp;
  return r;
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct PRF {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline PRF precision_recall_f1(const Counts& c) {
  PRF m;
  const std::size_t dets = c.tp + c.fp, gts = c.tp + c.fn;
  m.precision = dets == 0 ? 0.0 : static_cast<double>(c.tp) / dets;
  if (gts == 0)
    m.recall = dets == 0 ? 1.0 : 0.0;
  else
    m.recall = static_cast<double>(c.tp) / gts;
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

// One ranked detection of a class, pooled across the dataset.
struct ScoredHit {
  double confidence;
  bool tp;
};

// Area under the precision envelope, all-points interpolation. Ties in
// confidence keep input order. 0 when there are no ground truths.
inline double average_precision(std::vector<ScoredHit> hits, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::stable_sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    return a.confidence > b.confidence;
  });
  std::vector<double> prec(hits.size()), rec(hits.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    tp += hits[k].tp;
    prec[k] = static_cast<double>(tp) / (k + 1);
    rec[k] = static_cast<double>(tp) / n_gt;
  }
  for (std::size_t k = hits.size(); k-- > 1;) prec[k - 1] = std::max(prec[k - 1], prec[k]);
  double ap = 0.0, prev_r = 0.0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    ap += (rec[k] - prev_r) * prec[k];
    prev_r = rec[k];
  }
  return ap;
}

// Classes the mean AP is taken over.
inline constexpr std::array<ComponentClass, 4> kMapClasses = kTextureClasses;

struct ImageEval {
  std::string stem;
  std::vector<ComponentDetection> dets;
  std::vector<ComponentDetection> gts;  // confidence ignored
};

struct Misclassifications {
  std::size_t count = 0;
  // (gt class, detected class) -> count
  std::map<std::pair<ComponentClass, ComponentClass>, std::size_t> pairs;
};

// Detections that missed in the class-aware pass but hit an unmatched GT of
// another class in a second, class-agnostic greedy pass.
inline Misclassifications misclassification_tally(const std::vector<ComponentDetection>& dets,
                                                  const std::vector<ComponentDetection>& gts,
                                                  double iou_threshold = 0.5,
                                                  bool exclude_body = false) {
  std::vector<ComponentDetection> d, g;
  for (const auto& x : dets)
    if (!exclude_body || x.label != ComponentClass::Body) d.push_back(x);
  for (const auto& x : gts)
    if (!exclude_body || x.label != ComponentClass::Body) g.push_back(x);

  const MatchResult first = match_detections(d, g, iou_threshold, true);
  std::vector<ComponentDetection> fp_dets, free_gts;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!first.det_tp[i]) fp_dets.push_back(d[i]);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!first.gt_matched[i]) free_gts.push_back(g[i]);

  const MatchResult second = match_detections(fp_dets, free_gts, iou_threshold, false);
  Misclassifications m;
  for (std::size_t i = 0; i < fp_dets.size(); ++i) {
    if (!second.det_gt[i]) continue;
    const auto gl = free_gts[*second.det_gt[i]].label;
    if (gl == fp_dets[i].label) continue;
    ++m.count;
    ++m.pairs[{gl, fp_dets[i].label}];
  }
  return m;
}

struct ClassMetrics {
  ComponentClass cls = ComponentClass::Unknown;
  std::size_t n_gt = 0, n_det = 0;
  Counts counts;
  PRF prf;
  double ap = 0.0;
  bool present = false;  // has ground truth
};

struct OverlapSummary {
  double mean = 0.0;
  std::size_t images = 0;
  std::size_t vacuous = 0;
  std::int64_t inside = 0, outside = 0;
};

struct EvalReport {
  double iou_threshold = 0.5;
  std::size_t images = 0;
  std::vector<ClassMetrics> per_class;  // kComponentClasses order
  Counts overall_counts;
  PRF overall;
  double map50 = 0.0;
  std::vector<ComponentClass> map_classes;  // classes that entered the mean
  Misclassifications misclassified;
  Misclassifications misclassified_no_body;
  std::optional<OverlapSummary> sd_overlap;
  std::vector<std::string> notes;

  const ClassMetrics& metrics(ComponentClass c) const {
    return per_class[static_cast<std::size_t>(c)];
  }

  nlohmann::json to_json() const {
    using nlohmann::json;
    const auto prf_json = [](const Counts& c, const PRF& p) {
      return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", p.precision},
                  {"recall", p.recall}, {"f1", p.f1}};
    };
    const auto mis_json = [](const Misclassifications& m) {
      json pairs = json::array();
      for (const auto& [k, n] : m.pairs)
        pairs.push_back({{"gt", to_string(k.first)}, {"det", to_string(k.second)}, {"count", n}});
      return json{{"count", m.count}, {"pairs", pairs}};
    };
    json j;
    j["iou_threshold"] = iou_threshold;
    j["images"] = images;
    j["overall"] = prf_json(overall_counts, overall);
    j["map50"] = map50;
    j["map_classes"] = json::array();
    for (auto c : map_classes) j["map_classes"].push_back(to_string(c));
    for (const auto& m : per_class) {
      json cj = prf_json(m.counts, m.prf);
      cj["gt"] = m.n_gt;
      cj["detections"] = m.n_det;
      cj["ap"] = m.ap;
      j["classes"][std::string(to_string(m.cls))] = cj;
    }
    j["misclassification"] = {{"all", mis_json(misclassified)},
                              {"excluding_body", mis_json(misclassified_no_body)}};
    if (sd_overlap)
      j["sd_overlap"] = {{"mean", sd_overlap->mean},
                         {"images", sd_overlap->images},
                         {"vacuous_images", sd_overlap->vacuous},
                         {"detections_inside_gt", sd_overlap->inside},
                         {"detections_outside_gt", sd_overlap->outside}};
    j["notes"] = notes;
    return j;
  }

  std::string to_table() const {
    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-15s %6s %6s %6s %6s %6s %9s %7s %7s %7s\n", "class",
                  "gt", "det", "tp", "fp", "fn", "precision", "recall", "f1", "ap");
    s += buf;
    for (const auto& m : per_class) {
      if (m.n_gt == 0 && m.n_det == 0) continue;
      std::snprintf(buf, sizeof buf, "%-15s %6zu %6zu %6zu %6zu %6zu %9.4f %7.4f %7.4f %7.4f\n",
                    std::string(to_string(m.cls)).c_str(), m.n_gt, m.n_det, m.counts.tp,
                    m.counts.fp, m.counts.fn, m.prf.precision, m.prf.recall, m.prf.f1, m.ap);
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "%-15s %6zu %6zu %6zu %6zu %6zu %9.4f %7.4f %7.4f\n", "all",
                  overall_counts.tp + overall_counts.fn, overall_counts.tp + overall_counts.fp,
                  overall_counts.tp, overall_counts.fp, overall_counts.fn, overall.precision,
                  overall.recall, overall.f1);
    s += buf;
    std::snprintf(buf, sizeof buf, "mAP@%.2f: %.4f over %zu class(es)\n", iou_threshold, map50,
                  map_classes.size());
    s += buf;
    std::snprintf(buf, sizeof buf, "misclassified: %zu (excluding body: %zu)\n",
                  misclassified.count, misclassified_no_body.count);
    s += buf;
    if (sd_overlap) {
      std::snprintf(buf, sizeof buf,
                    "SD_overlap: mean %.4f over %zu image(s); detections inside/outside GT "
                    "%lld/%lld\n",
                    sd_overlap->mean, sd_overlap->images,
                    static_cast<long long>(sd_overlap->inside),
                    static_cast<long long>(sd_overlap->outside));
      s += buf;
    }
    for (const auto& n : notes) s += "note: " + n + "\n";
    return s;
  }
};

inline void merge_into(Misclassifications& into, const Misclassifications& m) {
  into.count += m.count;
  for (const auto& [k, n] : m.pairs) into.pairs[k] += n;
}

inline OverlapSummary summarize(const detect::BatchOverlap& b) {
  OverlapSummary s;
  s.mean = b.mean;
  s.images = b.per_image.size();
  for (const auto& v : b.per_image) s.vacuous += v.vacuous;
  s.inside = b.inside;
  s.outside = b.outside;
  return s;
}

inline EvalReport evaluate(const std::vector<ImageEval>& images, double iou_threshold = 0.5,
                           int jobs = 1) {
  struct PerImage {
    MatchResult match;
    Misclassifications all, no_body;
  };
  std::vector<PerImage> per(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    per[i].match = match_detections(images[i].dets, images[i].gts, iou_threshold);
    per[i].all = misclassification_tally(images[i].dets, images[i].gts, iou_threshold, false);
    per[i].no_body = misclassification_tally(images[i].dets, images[i].gts, iou_threshold, true);
  });

  EvalReport rep;
  rep.iou_threshold = iou_threshold;
  rep.images = images.size();
  std::array<std::vector<ScoredHit>, 6> hits;
  for (auto c : kComponentClasses) {
    ClassMetrics cm;
    cm.cls = c;
    rep.per_class.push_back(cm);
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& im = images[i];
    const auto& m = per[i].match;
    for (std::size_t d = 0; d < im.dets.size(); ++d) {
      auto& cm = rep.per_class[static_cast<std::size_t>(im.dets[d].label)];
      ++cm.n_det;
      ++(m.det_tp[d] ? cm.counts.tp : cm.counts.fp);
      hits[static_cast<std::size_t>(im.dets[d].label)].push_back(
          {im.dets[d].confidence, m.det_tp[d]});
    }
    for (std::size_t g = 0; g < im.gts.size(); ++g) {
      auto& cm = rep.per_class[static_cast<std::size_t>(im.gts[g].label)];
      ++cm.n_gt;
      if (!m.gt_matched[g]) ++cm.counts.fn;
    }
    merge_into(rep.misclassified, per[i].all);
    merge_into(rep.misclassified_no_body, per[i].no_body);
  }
  for (auto& cm : rep.per_class) {
    cm.present = cm.n_gt > 0;
    cm.prf = precision_recall_f1(cm.counts);
    cm.ap = average_precision(hits[static_cast<std::size_t>(cm.cls)], cm.n_gt);
    rep.overall_counts += cm.counts;
  }
  rep.overall = precision_recall_f1(rep.overall_counts);

  double sum = 0.0;
  for (auto c : kMapClasses) {
    const auto& cm = rep.metrics(c);
    if (!cm.present) {
      rep.notes.push_back("class '" + std::string(to_string(c)) +
                          "' has no ground truth; excluded from mAP");
      continue;
    }
    rep.map_classes.push_back(c);
    sum += cm.ap;
  }
  if (!rep.map_classes.empty()) rep.map50 = sum / rep.map_classes.size();
  return rep;
}

}  // namespace spy::eval
