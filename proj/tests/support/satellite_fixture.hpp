// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic "satellite" frames for end-to-end tests. Components on a beige
// backdrop that matches no color range:
//   solar     blue panels with a lighter cell grid (plus some white panels)
//   antenna   gray1 disks with radial shading
//   thruster  gray2 triangles shaded along their axis
//   body      silver rectangles with seams
//   unknown   flat black rectangles
// Labels are the tight bounds of the painted pixels.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "spy/annotation_io.hpp"
#include "spy/core.hpp"
#include "spy/image.hpp"

namespace spy::tst {

inline constexpr std::array<std::uint8_t, 3> kBeige = {220, 185, 150};

struct SatelliteFrame {
  ImageBuffer image;  // RGB
  std::vector<ComponentDetection> labels;
};

namespace fixture_detail {

using Rng = std::mt19937_64;

inline double uni(Rng& r, double a, double b) { return std::uniform_real_distribution<double>(a, b)(r); }
inline int unii(Rng& r, int a, int b) { return std::uniform_int_distribution<int>(a, b)(r); }

inline cv::Vec3b rgb(double r, double g, double b) {
  const auto c = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
  return {c(r), c(g), c(b)};
}

// Paints `color(x, y)` wherever `mask` is set inside `rect`.
template <typename ColorFn>
void paint(cv::Mat& img, const cv::Mat& mask, const cv::Rect& rect, ColorFn color) {
  for (int y = rect.y; y < rect.y + rect.height; ++y)
    for (int x = rect.x; x < rect.x + rect.width; ++x)
      if (mask.at<std::uint8_t>(y, x)) img.at<cv::Vec3b>(y, x) = color(x, y);
}

inline BoundingBox tight(const cv::Mat& mask) {
  const cv::Rect r = cv::boundingRect(mask);
  return {r.x, r.y, r.x + r.width, r.y + r.height};
}

}  // namespace fixture_detail

inline SatelliteFrame make_satellite_frame(std::uint64_t seed, std::uint64_t index, int size = 640) {
  using namespace fixture_detail;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5A7u};
  Rng rng(seq);

  cv::Mat img(size, size, CV_8UC3, cv::Scalar(kBeige[0], kBeige[1], kBeige[2]));
  std::vector<cv::Rect> taken;
  SatelliteFrame out;

  // Rejection-samples a free footprint of the given size, 10 px apart from
  // every earlier component.
  auto place = [&](int w, int h) -> std::optional<cv::Rect> {
    for (int attempt = 0; attempt < 300; ++attempt) {
      const cv::Rect r(unii(rng, 4, size - w - 4), unii(rng, 4, size - h - 4), w, h);
      const cv::Rect grown(r.x - 10, r.y - 10, r.width + 20, r.height + 20);
      if (std::none_of(taken.begin(), taken.end(), [&](const cv::Rect& t) { return (t & grown).area() > 0; })) {
        taken.push_back(r);
        return r;
      }
    }
    return std::nullopt;
  };

  auto add = [&](const cv::Mat& mask, ComponentClass cls) {
    out.labels.push_back({tight(mask), cls, 1.0});
  };

  auto solar = [&](bool white) {
    const int w = unii(rng, 90, 200), h = unii(rng, 50, 120);
    auto r = place(w, h);
    if (!r) return;
    cv::Mat mask = cv::Mat::zeros(size, size, CV_8U);
    cv::rectangle(mask, *r, 255, cv::FILLED);
    const int cell = unii(rng, 14, 24), line = unii(rng, 2, 3);
    std::vector<double> jitter(64 * 64);
    for (auto& j : jitter) j = uni(rng, 0.85, 1.15);
    paint(img, mask, *r, [&](int x, int y) {
      const int lx = (x - r->x) % cell, ly = (y - r->y) % cell;
      const bool grid = lx < line || ly < line;
      const double k = jitter[((y - r->y) / cell % 64) * 64 + (x - r->x) / cell % 64];
      if (white) return grid ? rgb(205, 205, 205) : rgb(240 * std::min(k, 1.06), 240 * std::min(k, 1.06), 240 * std::min(k, 1.06));
      return grid ? rgb(90, 140, 235) : rgb(25 * k, 60 * k, 170 * k);
    });
    add(mask, ComponentClass::Solar);
  };

  auto antenna = [&] {
    const int rad = unii(rng, 25, 60);
    auto r = place(2 * rad + 1, 2 * rad + 1);
    if (!r) return;
    cv::Mat mask = cv::Mat::zeros(size, size, CV_8U);
    const cv::Point c(r->x + rad, r->y + rad);
    cv::circle(mask, c, rad, 255, cv::FILLED);
    paint(img, mask, *r, [&](int x, int y) {
      const double d = std::hypot(x - c.x, y - c.y) / rad;
      const double v = 135.0 - 40.0 * std::min(d, 1.0) + (((x + y) & 1) ? 2.0 : -2.0);
      return rgb(v, v, v);
    });
    add(mask, ComponentClass::Antenna);
  };

  auto thruster = [&] {
    const int side = unii(rng, 50, 110);
    const int h = static_cast<int>(std::ceil(side * std::sqrt(3.0) / 2.0));
    auto r = place(side + 1, h + 1);
    if (!r) return;
    const bool up = unii(rng, 0, 1) == 1;
    std::vector<cv::Point> tri = up ? std::vector<cv::Point>{{r->x + side / 2, r->y}, {r->x, r->y + h}, {r->x + side, r->y + h}}
                                    : std::vector<cv::Point>{{r->x, r->y}, {r->x + side, r->y}, {r->x + side / 2, r->y + h}};
    cv::Mat mask = cv::Mat::zeros(size, size, CV_8U);
    cv::fillConvexPoly(mask, tri, 255);
    paint(img, mask, *r, [&](int x, int y) {
      const double t = static_cast<double>(y - r->y) / std::max(1, h);
      const double v = 55.0 + 30.0 * (up ? t : 1.0 - t) + ((x & 1) ? 1.5 : -1.5);
      return rgb(v, v, v);
    });
    add(mask, ComponentClass::Thruster);
  };

  auto body = [&] {
    const int w = unii(rng, 100, 180), h = unii(rng, 90, 160);
    auto r = place(w, h);
    if (!r) return;
    cv::Mat mask = cv::Mat::zeros(size, size, CV_8U);
    cv::rectangle(mask, *r, 255, cv::FILLED);
    const int seam = unii(rng, 25, 40);
    paint(img, mask, *r, [&](int x, int y) {
      if ((x - r->x) % seam == 0 || (y - r->y) % seam == 0) return rgb(150, 150, 152);
      const double v = 190.0 - 35.0 * static_cast<double>(x - r->x) / w;
      return rgb(v, v, v + 2);
    });
    add(mask, ComponentClass::Body);
  };

  auto black = [&] {
    const int w = unii(rng, 40, 110), h = unii(rng, 30, 90);
    auto r = place(w, h);
    if (!r) return;
    cv::Mat mask = cv::Mat::zeros(size, size, CV_8U);
    cv::rectangle(mask, *r, 255, cv::FILLED);
    const double v = unii(rng, 5, 20);
    paint(img, mask, *r, [&](int, int) { return rgb(v, v, v); });
    add(mask, ComponentClass::Unknown);
  };

  body();
  for (int i = unii(rng, 1, 2); i > 0; --i) solar(false);
  if (unii(rng, 0, 2) == 0) solar(true);
  for (int i = unii(rng, 1, 2); i > 0; --i) antenna();
  for (int i = unii(rng, 1, 2); i > 0; --i) thruster();
  black();

  std::vector<std::uint8_t> data(img.data, img.data + img.total() * 3);
  out.image = ImageBuffer(size, size, ColorSpace::RGB, std::move(data));
  return out;
}

// Writes images/<stem>.png and labels/<stem>.txt for `count` frames.
inline void write_satellite_set(const std::filesystem::path& dir, std::uint64_t seed,
                                std::size_t count, int size = 640) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  for (std::size_t i = 0; i < count; ++i) {
    const SatelliteFrame f = make_satellite_frame(seed, i, size);
    char stem[32];
    std::snprintf(stem, sizeof stem, "sat_%04zu", i);
    write_png(dir / "images" / (std::string(stem) + ".png"), f.image);
    std::vector<NormalizedBox> boxes;
    for (const auto& l : f.labels)
      boxes.push_back(pixel_to_normalized(l.box, static_cast<int>(l.label), size, size));
    io::write_labels(dir / "labels" / (std::string(stem) + ".txt"), boxes);
  }
}

}  // namespace spy::tst
