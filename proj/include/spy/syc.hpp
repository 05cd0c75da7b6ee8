// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "spy/core.hpp"
#include "spy/image.hpp"
#include "spy/preprocess.hpp"
#include "spy/scorers.hpp"

namespace spy::syc {

struct SycMode {
  bool suppress_body = false;
  bool radiator_merge = true;
  double unknown_threshold = 0.5;
};

// s * (c + v + e), per class.
inline ClassScoreVector psv(const ClassScoreVector& s, const ClassScoreVector& c,
                            const ClassScoreVector& v, const ClassScoreVector& e) {
  ClassScoreVector out;
  for (auto k : kComponentClasses) out[k] = s[k] * (c[k] + v[k] + e[k]);
  return out;
}

// s * (v + e) * c, per class.
inline ClassScoreVector muv(const ClassScoreVector& s, const ClassScoreVector& c,
                            const ClassScoreVector& v, const ClassScoreVector& e) {
  ClassScoreVector out;
  for (auto k : kComponentClasses) out[k] = s[k] * (v[k] + e[k]) * c[k];
  return out;
}

struct VotingResult {
  ClassScoreVector psv, muv;
  ClassScoreVector psv_norm, muv_norm;
  ComponentClass p = ComponentClass::Unknown;
  ComponentClass m = ComponentClass::Unknown;
  double pp = 0.0;
  double mp = 0.0;
};

inline VotingResult vote(const ClassScoreVector& s, const ClassScoreVector& c,
                         const ClassScoreVector& v, const ClassScoreVector& e) {
  VotingResult r;
  r.psv = psv(s, c, v, e);
  r.muv = muv(s, c, v, e);
  r.psv_norm = r.psv.normalized();
  r.muv_norm = r.muv.normalized();
  // An all-zero vote has no winner; treat it as Unknown at strength 0.
  if (auto a = r.psv_norm.argmax()) {
    r.p = *a;
    r.pp = r.psv_norm[*a];
  }
  if (auto a = r.muv_norm.argmax()) {
    r.m = *a;
    r.mp = r.muv_norm[*a];
  }
  return r;
}

// The decision ladder. `colors` are the raw color percentages of the crop and
// `variance_scores` the rebalanced variance class scores.
inline ComponentClass classify(const VotingResult& vr,
                               const scoring::ColorPercentages& colors,
                               const ClassScoreVector& variance_scores,
                               const SycMode& mode = {}) {
  using C = ComponentClass;
  auto decide = [&]() -> C {
    if (vr.p == C::Unknown && vr.pp > mode.unknown_threshold) return C::Unknown;
    if (vr.m == C::Unknown && vr.mp > mode.unknown_threshold) return C::Unknown;
    if (colors.dominant() == scoring::NamedColor::Blue) return C::Solar;
    if (vr.p == C::Thruster) return C::Thruster;
    if (vr.p == C::Antenna && vr.pp > vr.mp) return C::Antenna;
    if (variance_scores.argmax() == C::Solar) return C::Solar;
    return vr.m;
  };
  const C out = decide();
  return mode.suppress_body && out == C::Body ? C::Unknown : out;
}

// Everything the classifier needs besides the image and the boxes.
struct Scorers {
  scoring::ColorRangeConfig colors = scoring::ColorRangeConfig::defaults();
  scoring::TextureLUT lut;
};

// Full per-box trace, useful for debugging and tests.
struct BoxTrace {
  scoring::ColorPercentages colors;
  ClassScoreVector s, c;
  scoring::TextureScores texture;
  VotingResult vote;
  ComponentClass result = ComponentClass::Unknown;
};

inline BoxTrace classify_box(const ShapeDetection& det, const ImageBuffer& hsv,
                             const ImageBuffer& gray, const Scorers& scorers,
                             const SycMode& mode) {
  BoxTrace t;
  t.colors = scoring::color_percentages(crop(hsv, det.box), scorers.colors);
  t.c = scoring::color_score(t.colors, mode.radiator_merge);
  t.texture = scoring::texture_scores(crop(gray, det.box), scorers.lut);
  t.s = scoring::shape_score(det.label);
  t.vote = vote(t.s, t.c, t.texture.v, t.texture.e);
  t.result = classify(t.vote, t.colors, t.texture.v, mode);
  return t;
}

// Classifies shape detections against the original (unpreprocessed) image.
// Boxes with no area inside the frame are dropped.
inline std::vector<ComponentDetection> classify_detections(
    const std::vector<ShapeDetection>& boxes, const ImageBuffer& original,
    const Scorers& scorers, const SycMode& mode = {},
    std::vector<BoxTrace>* traces = nullptr) {
  // Grayscale inputs are replicated to RGB first; their crops are colorless.
  const ImageBuffer hsv = preprocess::convert_color_space(
      original.color_space() == ColorSpace::Grayscale
          ? preprocess::convert_color_space(original, ColorSpace::RGB)
          : original,
      ColorSpace::HSV);
  const ImageBuffer gray = preprocess::intensity_plane(original);
  std::vector<ComponentDetection> out;
  for (const auto& d : boxes) {
    const BoundingBox b = clip_box(d.box, original.width(), original.height());
    if (!b.valid()) continue;
    ShapeDetection clipped = d;
    clipped.box = b;
    BoxTrace t = classify_box(clipped, hsv, gray, scorers, mode);
    out.push_back({b, t.result, d.confidence});
    if (traces) traces->push_back(std::move(t));
  }
  return out;
}

}  // namespace spy::syc
