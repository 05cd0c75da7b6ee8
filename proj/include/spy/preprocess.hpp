// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "spy/core.hpp"
#include "spy/error.hpp"
#include "spy/image.hpp"

namespace spy::preprocess {

struct PreprocessConfig {
  bool gamma_enabled = false;
  double gamma = 0.8;

  bool roi_enabled = false;
  double roi_blur_sigma = 3.3;  // kernel support 2*ceil(3*sigma)+1 = 21 px
  int roi_threshold = 10;
  double roi_min_area = 200.0;
  double roi_pad_frac = 0.05;

  ColorSpace target_color_space = ColorSpace::Grayscale;

  void validate() const {
    if (!(gamma > 0.0)) throw ConfigError("gamma.value must be > 0");
    if (!(roi_blur_sigma > 0.0)) throw ConfigError("roi.sigma must be > 0");
    if (roi_threshold < 0 || roi_threshold > 255)
      throw ConfigError("roi.threshold must be in [0, 255]");
    if (roi_min_area < 0.0) throw ConfigError("roi.min_area must be >= 0");
    if (roi_pad_frac < 0.0) throw ConfigError("roi.pad_frac must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Gamma

inline std::array<std::uint8_t, 256> gamma_table(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError("gamma must be a positive finite number");
  std::array<std::uint8_t, 256> t{};
  for (int v = 0; v < 256; ++v) {
    const double out = 255.0 * std::pow(v / 255.0, gamma);
    t[v] = static_cast<std::uint8_t>(std::clamp(std::lround(out), 0L, 255L));
  }
  return t;
}

inline ImageBuffer gamma_correct(const ImageBuffer& img, double gamma) {
  const auto table = gamma_table(gamma);
  ImageBuffer out = img;
  for (auto& v : out.data()) v = table[v];
  return out;
}

// ---------------------------------------------------------------------------
// Color spaces. All conversions are defined from RGB; HSV and YCbCr sources
// are inverted to RGB first.

namespace detail {

inline std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return clamp8(0.299 * r + 0.587 * g + 0.114 * b);
}

// H scaled to 0-255 over 0-360 degrees; S and V to 0-255.
inline std::array<std::uint8_t, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g,
                                              std::uint8_t b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const int delta = mx - mn;
  double h = 0.0;
  if (delta > 0) {
    if (mx == r)
      h = 60.0 * std::fmod((static_cast<double>(g) - b) / delta + 6.0, 6.0);
    else if (mx == g)
      h = 60.0 * ((static_cast<double>(b) - r) / delta + 2.0);
    else
      h = 60.0 * ((static_cast<double>(r) - g) / delta + 4.0);
  }
  const double s = mx == 0 ? 0.0 : 255.0 * delta / mx;
  return {clamp8(h * 255.0 / 360.0), clamp8(s), static_cast<std::uint8_t>(mx)};
}

inline std::array<std::uint8_t, 3> hsv_to_rgb(std::uint8_t h8, std::uint8_t s8,
                                              std::uint8_t v8) {
  const double h = h8 * 360.0 / 255.0;
  const double s = s8 / 255.0;
  const double v = v8;
  const double c = v * s;
  const double hp = std::fmod(h / 60.0, 6.0);
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  return {clamp8(r + m), clamp8(g + m), clamp8(b + m)};
}

// BT.601 full range.
inline std::array<std::uint8_t, 3> rgb_to_ycbcr(std::uint8_t r, std::uint8_t g,
                                                std::uint8_t b) {
  return {clamp8(0.299 * r + 0.587 * g + 0.114 * b),
          clamp8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
          clamp8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b)};
}

inline std::array<std::uint8_t, 3> ycbcr_to_rgb(std::uint8_t y, std::uint8_t cb,
                                                std::uint8_t cr) {
  const double yy = y, u = cb - 128.0, v = cr - 128.0;
  return {clamp8(yy + 1.402 * v), clamp8(yy - 0.344136 * u - 0.714136 * v),
          clamp8(yy + 1.772 * u)};
}

template <typename Fn>
ImageBuffer map_pixels3(const ImageBuffer& img, ColorSpace out_cs, Fn fn) {
  ImageBuffer out(img.width(), img.height(), out_cs);
  const auto& src = img.data();
  auto& dst = out.data();
  const int out_ch = out.channels();
  for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i) {
    const auto px = fn(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
    for (int c = 0; c < out_ch; ++c) dst[out_ch * i + c] = px[c];
  }
  return out;
}

inline ImageBuffer to_rgb(const ImageBuffer& img) {
  switch (img.color_space()) {
    case ColorSpace::RGB: return img;
    case ColorSpace::HSV: return map_pixels3(img, ColorSpace::RGB, hsv_to_rgb);
    case ColorSpace::YCbCr:
      return map_pixels3(img, ColorSpace::RGB, ycbcr_to_rgb);
    case ColorSpace::Grayscale: {
      ImageBuffer out(img.width(), img.height(), ColorSpace::RGB);
      for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i)
        out.data()[3 * i] = out.data()[3 * i + 1] = out.data()[3 * i + 2] =
            img.data()[i];
      return out;
    }
  }
  return img;
}

}  // namespace detail

// Grayscale sources may only go to Grayscale (identity) or RGB (channel
// replication); everything else is rejected.
inline ImageBuffer convert_color_space(const ImageBuffer& img, ColorSpace target) {
  if (img.color_space() == target) return img;
  if (img.color_space() == ColorSpace::Grayscale && target != ColorSpace::RGB)
    throw Error("unsupported color conversion: " +
                std::string(to_string(img.color_space())) + " -> " +
                std::string(to_string(target)));
  const ImageBuffer rgb = detail::to_rgb(img);
  switch (target) {
    case ColorSpace::RGB: return rgb;
    case ColorSpace::HSV:
      return detail::map_pixels3(rgb, ColorSpace::HSV, detail::rgb_to_hsv);
    case ColorSpace::YCbCr:
      return detail::map_pixels3(rgb, ColorSpace::YCbCr, detail::rgb_to_ycbcr);
    case ColorSpace::Grayscale:
      return detail::map_pixels3(
          rgb, ColorSpace::Grayscale,
          [](std::uint8_t r, std::uint8_t g, std::uint8_t b) {
            return std::array<std::uint8_t, 1>{detail::luma(r, g, b)};
          });
  }
  throw Error("unsupported color conversion target");
}

// Single-channel brightness plane of any buffer: luma for RGB, Y for YCbCr,
// V for HSV.
inline ImageBuffer intensity_plane(const ImageBuffer& img) {
  const auto pick = [&](int channel) {
    ImageBuffer out(img.width(), img.height(), ColorSpace::Grayscale);
    for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i)
      out.data()[i] = img.data()[3 * i + channel];
    return out;
  };
  switch (img.color_space()) {
    case ColorSpace::Grayscale: return img;
    case ColorSpace::YCbCr: return pick(0);
    case ColorSpace::HSV: return pick(2);
    case ColorSpace::RGB: return convert_color_space(img, ColorSpace::Grayscale);
  }
  return img;
}

// ---------------------------------------------------------------------------
// ROI extraction

// |gray - GaussianBlur(gray)| > threshold, as a CV_8U 0/255 mask.
inline cv::Mat high_pass_mask(const ImageBuffer& gray, double sigma,
                              int threshold) {
  cv::Mat src = as_mat(gray);
  const int ksize = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  cv::Mat blurred;
  cv::GaussianBlur(src, blurred, cv::Size(ksize, ksize), sigma, sigma,
                   cv::BORDER_REPLICATE);
  cv::Mat diff;
  cv::absdiff(src, blurred, diff);
  cv::Mat mask;
  cv::threshold(diff, mask, threshold, 255, cv::THRESH_BINARY);
  return mask;
}

struct RoiResult {
  BoundingBox box;
  ImageBuffer crop;
  bool fallback = false;  // no contour survived; box is the full frame
};

inline RoiResult extract_roi(const ImageBuffer& img, const PreprocessConfig& cfg) {
  const ImageBuffer gray = intensity_plane(img);
  cv::Mat mask = high_pass_mask(gray, cfg.roi_blur_sigma, cfg.roi_threshold);
  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(mask, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_NONE);

  bool any = false;
  cv::Rect uni;
  for (const auto& c : contours) {
    if (cv::contourArea(c) < cfg.roi_min_area) continue;
    const cv::Rect r = cv::boundingRect(c);
    uni = any ? (uni | r) : r;
    any = true;
  }
  if (!any) return {img.frame(), img, true};

  const int pad_x = static_cast<int>(std::lround(cfg.roi_pad_frac * img.width()));
  const int pad_y = static_cast<int>(std::lround(cfg.roi_pad_frac * img.height()));
  BoundingBox box{uni.x - pad_x, uni.y - pad_y, uni.x + uni.width + pad_x,
                  uni.y + uni.height + pad_y};
  box = clip_box(box, img.width(), img.height());
  return {box, crop(img, box), false};
}

struct RoiCoverage {
  bool covered = true;
  std::vector<BoundingBox> violations;
};

inline RoiCoverage check_roi_covers_ground_truth(
    const BoundingBox& roi, std::span<const BoundingBox> gts) {
  RoiCoverage r;
  for (const auto& gt : gts)
    if (!roi.contains(gt)) r.violations.push_back(gt);
  r.covered = r.violations.empty();
  return r;
}

// ---------------------------------------------------------------------------

struct Preprocessed {
  ImageBuffer image;  // in cfg.target_color_space, cropped when ROI is on
  BoundingBox roi;    // placement of `image` inside the input frame
};

inline Preprocessed run(const ImageBuffer& input, const PreprocessConfig& cfg) {
  cfg.validate();
  ImageBuffer img = cfg.gamma_enabled ? gamma_correct(input, cfg.gamma) : input;
  BoundingBox roi = img.frame();
  if (cfg.roi_enabled) {
    RoiResult r = extract_roi(img, cfg);
    roi = r.box;
    img = std::move(r.crop);
  }
  if (img.color_space() != cfg.target_color_space) {
    if (img.color_space() == ColorSpace::Grayscale)
      img = convert_color_space(img, ColorSpace::RGB);
    img = convert_color_space(img, cfg.target_color_space);
  }
  return {std::move(img), roi};
}

}  // namespace spy::preprocess
