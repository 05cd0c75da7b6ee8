// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic primitive-shape dataset: filled, anti-aliased circles, rectangles,
// triangles and rings in gray hues on gray/white/black backgrounds, with
// tight axis-aligned annotations and optional geometric/photometric
// augmentation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include <opencv2/imgproc.hpp>

#include "spy/annotation_io.hpp"
#include "spy/core.hpp"
#include "spy/error.hpp"
#include "spy/image.hpp"
#include "spy/parallel.hpp"
#include "spy/preprocess.hpp"

namespace spy::shapegen {

struct ShapeSpec {
  ShapeClass shape = ShapeClass::Circle;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;        // circle, ring (outer)
  double inner_radius = 0.0;  // ring
  double width = 0.0;         // rectangle
  double height = 0.0;        // rectangle
  double side = 0.0;          // triangle (equilateral)
  double orientation = 0.0;   // triangle, radians
  std::uint8_t fill = 128;
};

struct AugmentConfig {
  bool rotation = false;
  double max_rotation_deg = 180.0;
  bool shear = false;
  double max_shear_deg = 15.0;
  bool blur = false;
  double max_blur_sigma = 2.0;
  bool noise = false;
  double max_noise_sigma = 15.0;
  // Warped labels smaller than this are removed, or the warp is resampled
  // when `resample_on_small_label` is set.
  std::int64_t min_label_area = 16;
  bool resample_on_small_label = false;

  bool any() const { return rotation || shear || blur || noise; }
};

struct GenConfig {
  int frame_size = 640;
  int count = 0;
  bool collage = false;
  int collage_min = 2;
  int collage_max = 6;
  double max_iou = 0.0;
  int placement_gap = 3;  // px between collaged shapes
  std::vector<std::uint8_t> backgrounds = {128, 255, 0};
  int contrast_margin = 30;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  int max_placement_attempts = 200;

  void validate() const {
    if (frame_size <= 0) throw ConfigError("frame_size must be > 0");
    if (count < 0) throw ConfigError("count must be >= 0");
    if (collage_min < 1 || collage_max < collage_min)
      throw ConfigError("collage shape range must satisfy 1 <= min <= max");
    if (backgrounds.empty()) throw ConfigError("background palette is empty");
    if (contrast_margin < 0 || contrast_margin > 127)
      throw ConfigError("contrast_margin must be in [0, 127]");
    if (max_iou < 0.0 || max_iou > 1.0)
      throw ConfigError("max_iou must be in [0, 1]");
  }
};

struct Annotation {
  ShapeClass shape;
  BoundingBox box;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Frame {
  ImageBuffer image;  // Grayscale
  std::uint8_t background = 0;
  std::vector<ShapeSpec> specs;
  std::vector<Annotation> labels;
};

// Independent stream per (seed, frame index).
inline std::mt19937_64 frame_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x5350u};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Geometry of a spec

struct Extent {
  double x0, y0, x1, y1;
};

inline std::array<std::array<double, 2>, 3> triangle_vertices(const ShapeSpec& s) {
  const double r = s.side / std::sqrt(3.0);  // circumradius
  std::array<std::array<double, 2>, 3> v{};
  for (int k = 0; k < 3; ++k) {
    const double a = s.orientation + k * 2.0 * std::numbers::pi / 3.0;
    v[k] = {s.cx + r * std::cos(a), s.cy + r * std::sin(a)};
  }
  return v;
}

inline Extent extent_of(const ShapeSpec& s) {
  switch (s.shape) {
    case ShapeClass::Circle:
    case ShapeClass::Ring:
      return {s.cx - s.radius, s.cy - s.radius, s.cx + s.radius, s.cy + s.radius};
    case ShapeClass::Rectangle:
      return {s.cx - s.width / 2, s.cy - s.height / 2, s.cx + s.width / 2,
              s.cy + s.height / 2};
    case ShapeClass::Triangle: {
      const auto v = triangle_vertices(s);
      Extent e{v[0][0], v[0][1], v[0][0], v[0][1]};
      for (const auto& p : v) {
        e.x0 = std::min(e.x0, p[0]);
        e.y0 = std::min(e.y0, p[1]);
        e.x1 = std::max(e.x1, p[0]);
        e.y1 = std::max(e.y1, p[1]);
      }
      return e;
    }
  }
  return {};
}

inline bool inside_shape(const ShapeSpec& s, double x, double y) {
  switch (s.shape) {
    case ShapeClass::Circle: {
      const double dx = x - s.cx, dy = y - s.cy;
      return dx * dx + dy * dy <= s.radius * s.radius;
    }
    case ShapeClass::Ring: {
      const double dx = x - s.cx, dy = y - s.cy;
      const double d2 = dx * dx + dy * dy;
      return d2 <= s.radius * s.radius && d2 >= s.inner_radius * s.inner_radius;
    }
    case ShapeClass::Rectangle:
      return x >= s.cx - s.width / 2 && x < s.cx + s.width / 2 &&
             y >= s.cy - s.height / 2 && y < s.cy + s.height / 2;
    case ShapeClass::Triangle: {
      const auto v = triangle_vertices(s);
      auto edge = [&](int i, int j) {
        return (v[j][0] - v[i][0]) * (y - v[i][1]) -
               (v[j][1] - v[i][1]) * (x - v[i][0]);
      };
      const double e0 = edge(0, 1), e1 = edge(1, 2), e2 = edge(2, 0);
      return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
    }
  }
  return false;
}

// Size invariants relative to the frame size.
inline bool spec_within_limits(const ShapeSpec& s, int frame_size) {
  const double f = frame_size;
  const auto in = [](double v, double lo, double hi) {
    return v >= lo - 1e-9 && v <= hi + 1e-9;
  };
  bool ok = false;
  switch (s.shape) {
    case ShapeClass::Circle: ok = in(s.radius, 0.05 * f, 0.10 * f); break;
    case ShapeClass::Ring:
      ok = in(s.radius, 0.05 * f, 0.10 * f) && s.inner_radius > 0 &&
           s.inner_radius < s.radius;
      break;
    case ShapeClass::Rectangle:
      ok = in(s.width, 0.05 * f, 0.5 * f) && in(s.height, 0.05 * f, 0.5 * f);
      break;
    case ShapeClass::Triangle: ok = in(s.side, 0.05 * f, 0.10 * f); break;
  }
  const Extent e = extent_of(s);
  return ok && e.x0 >= 0 && e.y0 >= 0 && e.x1 <= f && e.y1 <= f;
}

// ---------------------------------------------------------------------------
// Rendering

inline constexpr int kSupersample = 4;

// Composites `s` onto a grayscale canvas with box-filter anti-aliasing and
// returns the tight bounds of the pixels it changed.
inline std::optional<BoundingBox> render_shape(ImageBuffer& canvas,
                                               const ShapeSpec& s) {
  const Extent e = extent_of(s);
  const int x0 = std::max(0, static_cast<int>(std::floor(e.x0)) - 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(e.y0)) - 1);
  const int x1 = std::min(canvas.width(), static_cast<int>(std::ceil(e.x1)) + 1);
  const int y1 = std::min(canvas.height(), static_cast<int>(std::ceil(e.y1)) + 1);
  constexpr int n = kSupersample;
  std::optional<BoundingBox> lit;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < n; ++sy)
        for (int sx = 0; sx < n; ++sx)
          hits += inside_shape(s, x + (sx + 0.5) / n, y + (sy + 0.5) / n);
      if (hits == 0) continue;
      const double cov = static_cast<double>(hits) / (n * n);
      std::uint8_t& px = canvas.at(x, y);
      const std::uint8_t before = px;
      px = preprocess::detail::clamp8(px + (s.fill - static_cast<double>(px)) * cov);
      if (px == before) continue;
      if (!lit) {
        lit = BoundingBox{x, y, x + 1, y + 1};
      } else {
        lit->x_min = std::min(lit->x_min, x);
        lit->y_min = std::min(lit->y_min, y);
        lit->x_max = std::max(lit->x_max, x + 1);
        lit->y_max = std::max(lit->y_max, y + 1);
      }
    }
  }
  return lit;
}

inline Frame render_frame(int frame_size, std::uint8_t background,
                          std::vector<ShapeSpec> specs) {
  Frame f;
  f.image = ImageBuffer(frame_size, frame_size, ColorSpace::Grayscale, background);
  f.background = background;
  for (const auto& s : specs) {
    if (auto box = render_shape(f.image, s)) f.labels.push_back({s.shape, *box});
  }
  f.specs = std::move(specs);
  return f;
}

// ---------------------------------------------------------------------------
// Sampling

inline std::uint8_t sample_fill(std::mt19937_64& rng, std::uint8_t bg, int margin) {
  std::vector<int> allowed;
  for (int v = 0; v < 256; ++v)
    if (std::abs(v - bg) >= margin) allowed.push_back(v);
  std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
  return static_cast<std::uint8_t>(allowed[pick(rng)]);
}

inline ShapeSpec sample_spec(std::mt19937_64& rng, ShapeClass shape,
                             int frame_size, std::uint8_t fill) {
  const double f = frame_size;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  ShapeSpec s;
  s.shape = shape;
  s.fill = fill;
  switch (shape) {
    case ShapeClass::Circle: s.radius = uni(0.05 * f, 0.10 * f); break;
    case ShapeClass::Ring:
      s.radius = uni(0.05 * f, 0.10 * f);
      s.inner_radius = s.radius * uni(0.4, 0.8);
      break;
    case ShapeClass::Rectangle:
      s.width = uni(0.05 * f, 0.5 * f);
      s.height = uni(0.05 * f, 0.5 * f);
      break;
    case ShapeClass::Triangle:
      s.side = uni(0.05 * f, 0.10 * f);
      s.orientation = uni(0.0, 2.0 * std::numbers::pi);
      break;
  }
  // Center so that the extent sits inside the frame with a 1 px border.
  ShapeSpec probe = s;
  probe.cx = probe.cy = 0.0;
  const Extent e = extent_of(probe);
  s.cx = uni(1.0 - e.x0, f - 1.0 - e.x1);
  s.cy = uni(1.0 - e.y0, f - 1.0 - e.y1);
  return s;
}

inline BoundingBox extent_box(const ShapeSpec& s, int pad) {
  const Extent e = extent_of(s);
  return {static_cast<int>(std::floor(e.x0)) - pad,
          static_cast<int>(std::floor(e.y0)) - pad,
          static_cast<int>(std::ceil(e.x1)) + pad,
          static_cast<int>(std::ceil(e.y1)) + pad};
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentParams {
  double rotation_deg = 0.0;
  double shear_deg = 0.0;
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;

  bool identity() const {
    return rotation_deg == 0.0 && shear_deg == 0.0 && blur_sigma == 0.0 &&
           noise_sigma == 0.0;
  }
};

inline AugmentParams sample_augment(const AugmentConfig& cfg,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  AugmentParams p;
  if (cfg.rotation) p.rotation_deg = cfg.max_rotation_deg * u(rng);
  if (cfg.shear) p.shear_deg = cfg.max_shear_deg * u(rng);
  if (cfg.blur) p.blur_sigma = cfg.max_blur_sigma * u01(rng);
  if (cfg.noise) p.noise_sigma = cfg.max_noise_sigma * u01(rng);
  return p;
}

// Continuous-coordinate affine (rotation after x-shear) about the frame
// center: p' = A (p - c) + c.
struct Affine {
  double a00, a01, a10, a11, tx, ty;

  std::array<double, 2> apply(double x, double y) const {
    return {a00 * x + a01 * y + tx, a10 * x + a11 * y + ty};
  }
};

inline Affine make_affine(const AugmentParams& p, int width, int height) {
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  const double k = std::tan(p.shear_deg * std::numbers::pi / 180.0);
  const double c = std::cos(th), s = std::sin(th);
  // R * Sh with Sh = [[1, k], [0, 1]]
  Affine m{c, c * k - s, s, s * k + c, 0.0, 0.0};
  const double cx = width / 2.0, cy = height / 2.0;
  m.tx = cx - (m.a00 * cx + m.a01 * cy);
  m.ty = cy - (m.a10 * cx + m.a11 * cy);
  return m;
}

inline BoundingBox warp_box(const BoundingBox& b, const Affine& m) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (double x : {static_cast<double>(b.x_min), static_cast<double>(b.x_max)})
    for (double y : {static_cast<double>(b.y_min), static_cast<double>(b.y_max)}) {
      const auto p = m.apply(x, y);
      x0 = std::min(x0, p[0]);
      y0 = std::min(y0, p[1]);
      x1 = std::max(x1, p[0]);
      y1 = std::max(y1, p[1]);
    }
  constexpr double eps = 1e-6;
  return {static_cast<int>(std::floor(x0 + eps)), static_cast<int>(std::floor(y0 + eps)),
          static_cast<int>(std::ceil(x1 - eps)), static_cast<int>(std::ceil(y1 - eps))};
}

struct Augmented {
  ImageBuffer image;
  std::vector<Annotation> labels;
};

// Applies warp, then blur, then additive gaussian noise. `rng` drives the noise.
inline Augmented apply_augment(const ImageBuffer& img,
                               const std::vector<Annotation>& labels,
                               const AugmentParams& p, std::uint8_t background,
                               std::int64_t min_label_area, std::mt19937_64& rng) {
  if (p.identity()) return {img, labels};
  ImageBuffer out = img;
  std::vector<Annotation> out_labels = labels;

  if (p.rotation_deg != 0.0 || p.shear_deg != 0.0) {
    const Affine m = make_affine(p, img.width(), img.height());
    // OpenCV works on pixel-center indices: p_idx = p_cont - 0.5.
    const double tx = m.tx + 0.5 * (m.a00 + m.a01) - 0.5;
    const double ty = m.ty + 0.5 * (m.a10 + m.a11) - 0.5;
    cv::Mat M = (cv::Mat_<double>(2, 3) << m.a00, m.a01, tx, m.a10, m.a11, ty);
    cv::Mat dst;
    cv::warpAffine(as_mat(img), dst, M, cv::Size(img.width(), img.height()),
                   cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                   cv::Scalar::all(background));
    out = from_mat(dst, img.color_space());
    out_labels.clear();
    for (const auto& l : labels) {
      const BoundingBox b = clip_box(warp_box(l.box, m), img.width(), img.height());
      if (b.valid() && b.area() >= min_label_area) out_labels.push_back({l.shape, b});
    }
  }
  if (p.blur_sigma > 0.0) {
    const int k = 2 * static_cast<int>(std::ceil(3.0 * p.blur_sigma)) + 1;
    cv::Mat src = as_mat(out), dst;
    cv::GaussianBlur(src, dst, cv::Size(k, k), p.blur_sigma, p.blur_sigma,
                     cv::BORDER_REPLICATE);
    out = from_mat(dst, out.color_space());
  }
  if (p.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, p.noise_sigma);
    const int ch = out.channels();
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
      const double n = noise(rng);  // same offset on every channel keeps gray gray
      for (int c = 0; c < ch; ++c) {
        auto& v = out.data()[i * ch + c];
        v = preprocess::detail::clamp8(v + n);
      }
    }
  }
  return {std::move(out), std::move(out_labels)};
}

// ---------------------------------------------------------------------------
// Frame generation

inline Frame generate_frame(const GenConfig& cfg, std::uint64_t index) {
  cfg.validate();
  std::mt19937_64 rng = frame_rng(cfg.seed, index);
  std::uniform_int_distribution<std::size_t> pick_bg(0, cfg.backgrounds.size() - 1);
  const std::uint8_t bg = cfg.backgrounds[pick_bg(rng)];

  std::vector<ShapeClass> classes;
  if (cfg.collage) {
    std::uniform_int_distribution<int> count(cfg.collage_min, cfg.collage_max);
    std::uniform_int_distribution<int> cls(0, 3);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) classes.push_back(kShapeClasses[cls(rng)]);
  } else {
    classes.push_back(kShapeClasses[index % kShapeClasses.size()]);
  }

  std::vector<ShapeSpec> specs;
  std::vector<BoundingBox> placed;
  for (ShapeClass shape : classes) {
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_placement_attempts && !ok; ++attempt) {
      const ShapeSpec s =
          sample_spec(rng, shape, cfg.frame_size, sample_fill(rng, bg, cfg.contrast_margin));
      const BoundingBox b = extent_box(s, cfg.placement_gap);
      ok = std::all_of(placed.begin(), placed.end(), [&](const BoundingBox& o) {
        return iou(o, b) <= cfg.max_iou;
      });
      if (ok) {
        specs.push_back(s);
        placed.push_back(b);
      }
    }
    if (!ok)
      throw GenerationError("frame " + std::to_string(index) +
                            ": could not place " + std::string(to_string(shape)) +
                            " after " + std::to_string(cfg.max_placement_attempts) +
                            " attempts");
  }

  Frame frame = render_frame(cfg.frame_size, bg, std::move(specs));
  if (cfg.augment.any()) {
    const int tries = cfg.augment.resample_on_small_label ? 10 : 1;
    Augmented a;
    for (int t = 0; t < tries; ++t) {
      const AugmentParams p = sample_augment(cfg.augment, rng);
      a = apply_augment(frame.image, frame.labels, p, bg,
                        cfg.augment.min_label_area, rng);
      if (a.labels.size() == frame.labels.size()) break;
    }
    frame.image = std::move(a.image);
    frame.labels = std::move(a.labels);
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Dataset output

struct Manifest {
  std::size_t frames = 0;
  std::array<std::size_t, 4> per_class{};
  std::vector<std::string> stems;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "spy-shape-dataset/1";
    j["frames"] = frames;
    nlohmann::json classes = nlohmann::json::object();
    nlohmann::json counts = nlohmann::json::object();
    for (auto s : kShapeClasses) {
      classes[std::string(to_string(s))] = static_cast<int>(s);
      counts[std::string(to_string(s))] = per_class[static_cast<int>(s)];
    }
    j["class_map"] = classes;
    j["counts"] = counts;
    j["stems"] = stems;
    return j;
  }
};

inline std::string frame_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu", index);
  return buf;
}

inline void write_frame(const std::filesystem::path& out_dir,
                        const std::string& stem, const Frame& frame) {
  const ImageBuffer rgb = preprocess::convert_color_space(frame.image, ColorSpace::RGB);
  write_png(out_dir / "images" / (stem + ".png"), rgb);
  std::vector<NormalizedBox> boxes;
  for (const auto& l : frame.labels)
    boxes.push_back(pixel_to_normalized(l.box, static_cast<int>(l.shape),
                                        frame.image.width(), frame.image.height()));
  io::write_labels(out_dir / "labels" / (stem + ".txt"), boxes);
}

inline void write_manifest(const std::filesystem::path& out_dir, const Manifest& m) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  out << m.to_json().dump(2) << '\n';
}

inline Manifest write_dataset(const std::vector<Frame>& frames,
                              const std::filesystem::path& out_dir) {
  Manifest m;
  std::filesystem::create_directories(out_dir);
  if (!frames.empty()) {
    std::filesystem::create_directories(out_dir / "images");
    std::filesystem::create_directories(out_dir / "labels");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string stem = frame_stem(i);
    write_frame(out_dir, stem, frames[i]);
    m.stems.push_back(stem);
    for (const auto& l : frames[i].labels) ++m.per_class[static_cast<int>(l.shape)];
  }
  m.frames = frames.size();
  write_manifest(out_dir, m);
  return m;
}

// Generates and writes cfg.count frames using up to `jobs` threads. Output is
// independent of `jobs`.
inline Manifest generate_dataset(const GenConfig& cfg,
                                 const std::filesystem::path& out_dir, int jobs) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const auto n = static_cast<std::size_t>(cfg.count);
  if (n > 0) {
    std::filesystem::create_directories(out_dir / "images");
    std::filesystem::create_directories(out_dir / "labels");
  }
  std::vector<std::array<std::size_t, 4>> counts(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const Frame f = generate_frame(cfg, i);
    write_frame(out_dir, frame_stem(i), f);
    for (const auto& l : f.labels) ++counts[i][static_cast<int>(l.shape)];
  });
  Manifest m;
  m.frames = n;
  for (std::size_t i = 0; i < n; ++i) {
    m.stems.push_back(frame_stem(i));
    for (int c = 0; c < 4; ++c) m.per_class[c] += counts[i][c];
  }
  write_manifest(out_dir, m);
  return m;
}

}  // namespace spy::shapegen
