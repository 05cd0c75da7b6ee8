// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "spy/error.hpp"

namespace spy {

// Pixel-space axis-aligned box, half-open: [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool valid() const {
    return x_min >= 0 && y_min >= 0 && x_min < x_max && y_min < y_max;
  }

  bool contains(const BoundingBox& other) const {
    return other.x_min >= x_min && other.y_min >= y_min &&
           other.x_max <= x_max && other.y_max <= y_max;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Box in label-file convention: center and extent as fractions of the frame.
struct NormalizedBox {
  int class_id = 0;
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

enum class ShapeClass : int { Circle = 0, Rectangle = 1, Triangle = 2, Ring = 3 };

inline constexpr std::array<ShapeClass, 4> kShapeClasses = {
    ShapeClass::Circle, ShapeClass::Rectangle, ShapeClass::Triangle,
    ShapeClass::Ring};

enum class ComponentClass : int {
  Antenna = 0,
  Body = 1,
  Solar = 2,
  Thruster = 3,
  WhiteRadiator = 4,
  Unknown = 5,
};

// Fixed class order; also the tie-break order for every argmax.
inline constexpr std::array<ComponentClass, 6> kComponentClasses = {
    ComponentClass::Antenna,  ComponentClass::Body,
    ComponentClass::Solar,    ComponentClass::Thruster,
    ComponentClass::WhiteRadiator, ComponentClass::Unknown};

// Classes with texture histograms.
inline constexpr std::array<ComponentClass, 4> kTextureClasses = {
    ComponentClass::Antenna, ComponentClass::Body, ComponentClass::Solar,
    ComponentClass::Thruster};

inline constexpr std::string_view to_string(ShapeClass s) {
  switch (s) {
    case ShapeClass::Circle: return "circle";
    case ShapeClass::Rectangle: return "rectangle";
    case ShapeClass::Triangle: return "triangle";
    case ShapeClass::Ring: return "ring";
  }
  return "?";
}

inline constexpr std::string_view to_string(ComponentClass c) {
  switch (c) {
    case ComponentClass::Antenna: return "antenna";
    case ComponentClass::Body: return "body";
    case ComponentClass::Solar: return "solar";
    case ComponentClass::Thruster: return "thruster";
    case ComponentClass::WhiteRadiator: return "white_radiator";
    case ComponentClass::Unknown: return "unknown";
  }
  return "?";
}

inline std::optional<ShapeClass> shape_class_from_id(int id) {
  if (id < 0 || id > 3) return std::nullopt;
  return static_cast<ShapeClass>(id);
}

inline std::optional<ComponentClass> component_class_from_id(int id) {
  if (id < 0 || id > 5) return std::nullopt;
  return static_cast<ComponentClass>(id);
}

inline std::optional<ComponentClass> component_class_from_name(
    std::string_view name) {
  for (auto c : kComponentClasses)
    if (to_string(c) == name) return c;
  return std::nullopt;
}

// Label tag for a detection; ShapeClass before classification, ComponentClass
// after.
template <typename Label>
concept DetectionLabel =
    std::is_same_v<Label, ShapeClass> || std::is_same_v<Label, ComponentClass>;

template <DetectionLabel Label>
struct Detection {
  BoundingBox box;
  Label label{};
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using ShapeDetection = Detection<ShapeClass>;
using ComponentDetection = Detection<ComponentClass>;

// One non-negative score per ComponentClass, indexed in kComponentClasses
// order.
class ClassScoreVector {
 public:
  ClassScoreVector() { values_.fill(0.0); }
  explicit ClassScoreVector(const std::array<double, 6>& v) : values_(v) {}

  double& operator[](ComponentClass c) {
    return values_[static_cast<std::size_t>(c)];
  }
  double operator[](ComponentClass c) const {
    return values_[static_cast<std::size_t>(c)];
  }

  const std::array<double, 6>& values() const { return values_; }

  double sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  // Sum-normalized copy; the all-zero vector stays all-zero.
  ClassScoreVector normalized() const {
    const double s = sum();
    ClassScoreVector out;
    if (s <= 0.0) return out;
    for (std::size_t i = 0; i < values_.size(); ++i)
      out.values_[i] = values_[i] / s;
    return out;
  }

  // Argmax with ties broken by class order; nullopt when every entry is 0.
  std::optional<ComponentClass> argmax() const {
    std::optional<ComponentClass> best;
    double best_v = 0.0;
    for (auto c : kComponentClasses) {
      if ((*this)[c] > best_v) {
        best_v = (*this)[c];
        best = c;
      }
    }
    return best;
  }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  friend bool operator==(const ClassScoreVector&,
                         const ClassScoreVector&) = default;

 private:
  std::array<double, 6> values_;
};

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const int ix0 = std::max(a.x_min, b.x_min);
  const int iy0 = std::max(a.y_min, b.y_min);
  const int ix1 = std::min(a.x_max, b.x_max);
  const int iy1 = std::min(a.y_max, b.y_max);
  if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
  const std::int64_t inter =
      static_cast<std::int64_t>(ix1 - ix0) * (iy1 - iy0);
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline BoundingBox clip_box(BoundingBox b, int width, int height) {
  b.x_min = std::clamp(b.x_min, 0, width);
  b.x_max = std::clamp(b.x_max, 0, width);
  b.y_min = std::clamp(b.y_min, 0, height);
  b.y_max = std::clamp(b.y_max, 0, height);
  return b;
}

inline BoundingBox normalized_to_pixel(const NormalizedBox& n, int width,
                                       int height) {
  if (width <= 0 || height <= 0)
    throw MalformedAnnotation("frame dimensions must be positive");
  if (!std::isfinite(n.cx) || !std::isfinite(n.cy) || !std::isfinite(n.w) ||
      !std::isfinite(n.h) || n.w <= 0.0 || n.h <= 0.0)
    throw MalformedAnnotation("normalized box has non-positive or non-finite extent");
  BoundingBox b{
      static_cast<int>(std::lround((n.cx - 0.5 * n.w) * width)),
      static_cast<int>(std::lround((n.cy - 0.5 * n.h) * height)),
      static_cast<int>(std::lround((n.cx + 0.5 * n.w) * width)),
      static_cast<int>(std::lround((n.cy + 0.5 * n.h) * height))};
  b = clip_box(b, width, height);
  if (!b.valid())
    throw MalformedAnnotation("box has zero area after clipping to frame");
  return b;
}

inline NormalizedBox pixel_to_normalized(const BoundingBox& b, int class_id,
                                         int width, int height) {
  return NormalizedBox{class_id, b.center_x() / width, b.center_y() / height,
                       static_cast<double>(b.width()) / width,
                       static_cast<double>(b.height()) / height};
}

// Binary raster, row-major, one byte per pixel (0 or 1).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return bits[static_cast<std::size_t>(y) * width + x];
  }

  std::int64_t popcount() const {
    std::int64_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
};

inline void paint_box(Mask& m, const BoundingBox& box) {
  const BoundingBox b = clip_box(box, m.width, m.height);
  for (int y = b.y_min; y < b.y_max; ++y)
    std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(y) * m.width +
                    b.x_min,
                std::max(0, b.x_max - b.x_min), std::uint8_t{1});
}

inline Mask rasterize_union(std::span<const BoundingBox> boxes, int width,
                            int height) {
  Mask m(width, height);
  for (const auto& b : boxes) paint_box(m, b);
  return m;
}

inline std::int64_t intersection_count(const Mask& a, const Mask& b) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) n += a.bits[i] & b.bits[i];
  return n;
}

}  // namespace spy
