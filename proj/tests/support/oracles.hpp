// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, independent reference implementations used to check the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "spy/core.hpp"

namespace spy::oracle {

// IoU by counting pixels.
inline double pixel_iou(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = std::min(a.x_min, b.x_min), x1 = std::max(a.x_max, b.x_max);
  const int y0 = std::min(a.y_min, b.y_min), y1 = std::max(a.y_max, b.y_max);
  long inter = 0, uni = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const bool ia = x >= a.x_min && x < a.x_max && y >= a.y_min && y < a.y_max;
      const bool ib = x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
      inter += ia && ib;
      uni += ia || ib;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

// Coverage of the GT union by the prediction union, by visiting every pixel.
inline double pixel_overlap(const std::vector<BoundingBox>& gts,
                            const std::vector<BoundingBox>& preds, int w, int h) {
  const auto covered = [](const std::vector<BoundingBox>& bs, int x, int y) {
    return std::any_of(bs.begin(), bs.end(), [&](const BoundingBox& b) {
      return x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
    });
  };
  long g = 0, both = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (covered(gts, x, y)) {
        ++g;
        both += covered(preds, x, y);
      }
  return g == 0 ? 1.0 : static_cast<double>(both) / g;
}

// Exhaustive matcher. Enumerates every one-to-one partial assignment of
// detections to eligible GTs (same class, IoU >= threshold) and keeps the one
// whose per-detection keys, read in confidence order (ties by index), are
// lexicographically largest. Key of a matched detection is (IoU, -gt index);
// unmatched ranks below every match.
struct OracleMatch {
  std::vector<int> det_gt;  // -1 when unmatched
  std::size_t tp = 0, fp = 0, fn = 0;
};

template <DetectionLabel L>
OracleMatch brute_force_match(const std::vector<Detection<L>>& dets,
                              const std::vector<Detection<L>>& gts, double thr) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return dets[a].confidence > dets[b].confidence;
  });

  using Key = std::pair<double, int>;
  const Key none{-1.0, 0};
  std::vector<int> cur(dets.size(), -1), best(dets.size(), -1);
  std::vector<Key> best_keys;
  bool have_best = false;
  std::vector<bool> used(gts.size(), false);

  const auto keys_of = [&](const std::vector<int>& a) {
    std::vector<Key> k;
    for (auto d : order)
      k.push_back(a[d] < 0 ? none : Key{pixel_iou(dets[d].box, gts[a[d]].box), -a[d]});
    return k;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == order.size()) {
      auto k = keys_of(cur);
      if (!have_best || k > best_keys) {
        have_best = true;
        best = cur;
        best_keys = std::move(k);
      }
      return;
    }
    const std::size_t d = order[pos];
    cur[d] = -1;
    rec(pos + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].label != dets[d].label) continue;
      if (pixel_iou(dets[d].box, gts[g].box) < thr) continue;
      used[g] = true;
      cur[d] = static_cast<int>(g);
      rec(pos + 1);
      used[g] = false;
      cur[d] = -1;
    }
  };
  rec(0);

  OracleMatch m;
  m.det_gt = best;
  for (int g : m.det_gt) (g >= 0 ? m.tp : m.fp) += 1;
  m.fn = gts.size() - m.tp;
  return m;
}

// AP as (1/nGT) * sum over true-positive ranks k of max_{j >= k} precision_j.
inline double ap_oracle(std::vector<std::pair<double, bool>> ranked, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t n = ranked.size();
  std::vector<double> prec(n);
  std::size_t tp = 0;
  for (std::size_t j = 0; j < n; ++j) {
    tp += ranked[j].second;
    prec[j] = static_cast<double>(tp) / (j + 1);
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!ranked[k].second) continue;
    double m = 0.0;
    for (std::size_t j = k; j < n; ++j) m = std::max(m, prec[j]);
    ap += m / n_gt;
  }
  return ap;
}

// Population variance and histogram entropy (x1000) straight from the
// definitions.
inline double variance(const std::vector<std::uint8_t>& px) {
  long double mean = 0;
  for (auto v : px) mean += v;
  mean /= px.size();
  long double s = 0;
  for (auto v : px) s += (v - mean) * (v - mean);
  return static_cast<double>(s / px.size());
}

inline double entropy(const std::vector<std::uint8_t>& px) {
  std::map<int, long> counts;
  for (auto v : px) ++counts[v];
  double h = 0;
  for (const auto& [_, c] : counts) {
    const double q = static_cast<double>(c) / px.size();
    h -= q * std::log2(q);
  }
  return 1000.0 * h;
}

}  // namespace spy::oracle
