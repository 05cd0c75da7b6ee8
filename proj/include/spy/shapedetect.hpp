// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "spy/annotation_io.hpp"
#include "spy/core.hpp"
#include "spy/error.hpp"
#include "spy/image.hpp"
#include "spy/preprocess.hpp"

namespace spy::detect {

// Source of shape-primitive detections for one image. Implementations are
// read-only after construction and may be called concurrently.
class ShapeDetectionProvider {
 public:
  virtual ~ShapeDetectionProvider() = default;
  // `stem` identifies the image for providers that look results up by name.
  virtual std::vector<ShapeDetection> detect(const ImageBuffer& img,
                                             std::string_view stem) const = 0;
};

// Runs the provider and enforces the output contract: boxes clipped to the
// frame (empty ones dropped), confidences clamped to [0, 1].
inline std::vector<ShapeDetection> detect_shapes(
    const ShapeDetectionProvider& provider, const ImageBuffer& img,
    std::string_view stem = {}) {
  std::vector<ShapeDetection> out;
  for (auto d : provider.detect(img, stem)) {
    d.box = clip_box(d.box, img.width(), img.height());
    if (!d.box.valid()) continue;
    d.confidence = std::clamp(d.confidence, 0.0, 1.0);
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------

// Reads `<dir>/<stem>.txt` detection files (class_id confidence cx cy w h),
// normalized to the image handed to detect().
class ReplayProvider final : public ShapeDetectionProvider {
 public:
  explicit ReplayProvider(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
      throw ConfigError("replay detections directory does not exist: " +
                        dir_.string());
  }

  std::vector<ShapeDetection> detect(const ImageBuffer& img,
                                     std::string_view stem) const override {
    const auto path = dir_ / (std::string(stem) + ".txt");
    if (!std::filesystem::is_regular_file(path))
      throw MissingDetections("no detections for '" + std::string(stem) +
                              "' (expected " + path.string() + ")");
    return io::to_pixel_detections<ShapeClass>(io::read_detections(path),
                                               img.width(), img.height());
  }

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------

struct GeometricConfig {
  enum class Binarize { Background, HighPass };

  // Background: |I - median(border pixels)| > background_threshold.
  // HighPass: same filter as the ROI extractor.
  Binarize binarize = Binarize::Background;
  int background_threshold = 12;
  double highpass_sigma = 3.3;
  int highpass_threshold = 10;

  double epsilon_frac = 0.02;
  double circularity_min = 0.8;
  double right_angle_tol_deg = 15.0;
  double min_area = 50.0;
  double min_hole_frac = 0.08;  // hole area / outer area needed for a ring

  void validate() const {
    if (!(epsilon_frac > 0.0 && epsilon_frac <= 0.2))
      throw ConfigError("geometric.epsilon_frac must be in (0, 0.2]");
    if (!(min_area > 0.0)) throw ConfigError("geometric.min_area must be > 0");
    if (!(circularity_min > 0.0 && circularity_min <= 1.0))
      throw ConfigError("geometric.circularity_min must be in (0, 1]");
    if (!(right_angle_tol_deg > 0.0 && right_angle_tol_deg < 90.0))
      throw ConfigError("geometric.right_angle_tol_deg must be in (0, 90)");
    if (background_threshold < 0 || background_threshold > 255 ||
        highpass_threshold < 0 || highpass_threshold > 255)
      throw ConfigError("geometric thresholds must be in [0, 255]");
  }
};

namespace detail {

inline std::uint8_t border_median(const ImageBuffer& gray) {
  std::array<std::size_t, 256> hist{};
  std::size_t n = 0;
  const int w = gray.width(), h = gray.height();
  for (int x = 0; x < w; ++x) {
    ++hist[gray.at(x, 0)];
    ++hist[gray.at(x, h - 1)];
    n += 2;
  }
  for (int y = 1; y < h - 1; ++y) {
    ++hist[gray.at(0, y)];
    ++hist[gray.at(w - 1, y)];
    n += 2;
  }
  std::size_t acc = 0;
  for (int v = 0; v < 256; ++v) {
    acc += hist[v];
    if (2 * acc >= n) return static_cast<std::uint8_t>(v);
  }
  return 0;
}

// Interior angles in degrees of a closed polygon.
inline std::vector<double> interior_angles(const std::vector<cv::Point>& poly) {
  std::vector<double> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cv::Point2d a = poly[(i + n - 1) % n], b = poly[i], c = poly[(i + 1) % n];
    const cv::Point2d u = a - b, v = c - b;
    const double nu = std::hypot(u.x, u.y), nv = std::hypot(v.x, v.y);
    if (nu == 0.0 || nv == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const double cosang = std::clamp((u.x * v.x + u.y * v.y) / (nu * nv), -1.0, 1.0);
    out.push_back(std::acos(cosang) * 180.0 / std::numbers::pi);
  }
  return out;
}

inline double circularity(const std::vector<cv::Point>& contour) {
  const double p = cv::arcLength(contour, true);
  if (p <= 0.0) return 0.0;
  return 4.0 * std::numbers::pi * cv::contourArea(contour) / (p * p);
}

struct PolygonFit {
  std::optional<ShapeClass> shape;
  double quality = 0.0;
};

inline PolygonFit classify_polygon(const std::vector<cv::Point>& poly,
                                   double right_angle_tol) {
  if (poly.size() == 3) {
    double dev = 0.0;
    for (double a : interior_angles(poly)) dev += std::fabs(a - 60.0);
    return {ShapeClass::Triangle, std::clamp(1.0 - dev / 3.0 / 60.0, 0.0, 1.0)};
  }
  if (poly.size() == 4 && cv::isContourConvex(poly)) {
    double worst = 0.0;
    for (double a : interior_angles(poly)) worst = std::max(worst, std::fabs(a - 90.0));
    if (worst <= right_angle_tol)
      return {ShapeClass::Rectangle, std::clamp(1.0 - worst / 90.0, 0.0, 1.0)};
  }
  return {};
}

}  // namespace detail

// Classical contour-based primitive detector: binarize, trace borders with
// hierarchy, approximate polygons and classify by vertex count, right angles
// and circularity. A circular contour with a circular hole is one Ring.
class GeometricProvider final : public ShapeDetectionProvider {
 public:
  explicit GeometricProvider(GeometricConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const GeometricConfig& config() const { return cfg_; }

  cv::Mat binarize(const ImageBuffer& img) const {
    const ImageBuffer gray = preprocess::intensity_plane(img);
    if (cfg_.binarize == GeometricConfig::Binarize::HighPass)
      return preprocess::high_pass_mask(gray, cfg_.highpass_sigma,
                                        cfg_.highpass_threshold);
    const int bg = detail::border_median(gray);
    cv::Mat diff;
    cv::absdiff(as_mat(gray), cv::Scalar::all(bg), diff);
    cv::Mat mask;
    cv::threshold(diff, mask, cfg_.background_threshold, 255, cv::THRESH_BINARY);
    return mask;
  }

  std::vector<ShapeDetection> detect(const ImageBuffer& img,
                                     std::string_view /*stem*/) const override {
    cv::Mat mask = binarize(img);
    std::vector<std::vector<cv::Point>> contours;
    std::vector<cv::Vec4i> hierarchy;
    cv::findContours(mask, contours, hierarchy, cv::RETR_CCOMP,
                     cv::CHAIN_APPROX_NONE);

    std::vector<ShapeDetection> out;
    for (std::size_t i = 0; i < contours.size(); ++i) {
      if (hierarchy[i][3] != -1) continue;  // holes are handled with their parent
      const auto& c = contours[i];
      const double area = cv::contourArea(c);
      if (area < cfg_.min_area) continue;
      const cv::Rect r = cv::boundingRect(c);
      const BoundingBox box{r.x, r.y, r.x + r.width, r.y + r.height};
      const double circ = detail::circularity(c);

      // Largest hole.
      int hole = -1;
      double hole_area = 0.0;
      for (int h = hierarchy[i][2]; h >= 0; h = hierarchy[h][0]) {
        const double a = cv::contourArea(contours[h]);
        if (a > hole_area) {
          hole_area = a;
          hole = h;
        }
      }
      if (hole >= 0 && circ >= cfg_.circularity_min &&
          hole_area >= cfg_.min_hole_frac * area) {
        const double hole_circ = detail::circularity(contours[hole]);
        if (hole_circ >= cfg_.circularity_min) {
          out.push_back({box, ShapeClass::Ring,
                         std::clamp(std::min(circ, hole_circ), 0.0, 1.0)});
          continue;
        }
      }

      if (auto fit = classify(c, circ)) out.push_back({box, fit->shape.value(), fit->quality});
    }
    return out;
  }

 private:
  std::optional<detail::PolygonFit> classify(const std::vector<cv::Point>& c,
                                             double circ) const {
    const double perim = cv::arcLength(c, true);
    std::vector<cv::Point> poly;
    cv::approxPolyDP(c, poly, cfg_.epsilon_frac * perim, true);
    if (auto fit = detail::classify_polygon(poly, cfg_.right_angle_tol_deg); fit.shape)
      return fit;
    if (circ >= cfg_.circularity_min)
      return detail::PolygonFit{ShapeClass::Circle, std::clamp(circ, 0.0, 1.0)};
    // Rasterized corners can leave extra vertices; retry on the hull with a
    // coarser tolerance.
    std::vector<cv::Point> hull;
    cv::convexHull(c, hull);
    for (double scale : {1.5, 2.0, 3.0}) {
      cv::approxPolyDP(hull, poly, scale * cfg_.epsilon_frac * perim, true);
      if (auto fit = detail::classify_polygon(poly, cfg_.right_angle_tol_deg); fit.shape)
        return fit;
    }
    return std::nullopt;
  }

  GeometricConfig cfg_;
};

// ---------------------------------------------------------------------------
// Shape-detector overlap: fraction of the ground-truth mask covered by the
// union of predicted boxes.

struct OverlapValue {
  double value = 1.0;
  bool vacuous = false;  // empty ground truth
};

inline OverlapValue sd_overlap(std::span<const BoundingBox> gts,
                               std::span<const BoundingBox> preds, int width,
                               int height) {
  const Mask gt = rasterize_union(gts, width, height);
  const std::int64_t gt_area = gt.popcount();
  if (gt_area == 0) return {1.0, true};
  const Mask pm = rasterize_union(preds, width, height);
  return {static_cast<double>(intersection_count(gt, pm)) / gt_area, false};
}

struct OverlapFrame {
  int width = 0;
  int height = 0;
  std::vector<BoundingBox> boxes;
};

struct BatchOverlap {
  std::vector<std::string> stems;
  std::vector<OverlapValue> per_image;
  double mean = 0.0;
  std::int64_t inside = 0;   // detections centered inside the GT union
  std::int64_t outside = 0;  // detections centered outside it
};

inline BatchOverlap batch_sd_overlap(const std::map<std::string, OverlapFrame>& gts,
                                     const std::map<std::string, OverlapFrame>& preds) {
  std::vector<std::string> missing;
  for (const auto& [stem, _] : gts)
    if (!preds.contains(stem)) missing.push_back(stem + " (no detections)");
  for (const auto& [stem, _] : preds)
    if (!gts.contains(stem)) missing.push_back(stem + " (no ground truth)");
  if (!missing.empty()) {
    std::string msg = "mismatched stems:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }

  BatchOverlap out;
  double sum = 0.0;
  for (const auto& [stem, gt] : gts) {
    const auto& pr = preds.at(stem);
    const OverlapValue v = sd_overlap(gt.boxes, pr.boxes, gt.width, gt.height);
    out.stems.push_back(stem);
    out.per_image.push_back(v);
    sum += v.value;
    const Mask m = rasterize_union(gt.boxes, gt.width, gt.height);
    for (const auto& b : pr.boxes) {
      const int cx = std::clamp(static_cast<int>(std::floor(b.center_x())), 0, gt.width - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(b.center_y())), 0, gt.height - 1);
      (m.at(cx, cy) ? out.inside : out.outside) += 1;
    }
  }
  if (!out.per_image.empty()) out.mean = sum / static_cast<double>(out.per_image.size());
  return out;
}

}  // namespace spy::detect
