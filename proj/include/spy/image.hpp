// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "spy/core.hpp"
#include "spy/error.hpp"

namespace spy {

enum class ColorSpace { RGB, HSV, YCbCr, Grayscale };

inline constexpr std::string_view to_string(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB: return "rgb";
    case ColorSpace::HSV: return "hsv";
    case ColorSpace::YCbCr: return "ycbcr";
    case ColorSpace::Grayscale: return "grayscale";
  }
  return "?";
}

inline ColorSpace color_space_from_string(std::string_view s) {
  for (auto cs : {ColorSpace::RGB, ColorSpace::HSV, ColorSpace::YCbCr,
                  ColorSpace::Grayscale})
    if (to_string(cs) == s) return cs;
  if (s == "gray") return ColorSpace::Grayscale;
  throw ConfigError("unknown color space '" + std::string(s) + "'");
}

// 8-bit raster with an explicit color-space tag. Row-major, interleaved.
class ImageBuffer {
 public:
  ImageBuffer() = default;

  ImageBuffer(int width, int height, ColorSpace cs, std::uint8_t fill = 0)
      : width_(width), height_(height), color_space_(cs),
        data_(static_cast<std::size_t>(width) * height * channels_for(cs),
              fill) {
    if (width <= 0 || height <= 0)
      throw Error("image dimensions must be positive");
  }

  ImageBuffer(int width, int height, ColorSpace cs,
              std::vector<std::uint8_t> data)
      : width_(width), height_(height), color_space_(cs),
        data_(std::move(data)) {
    if (width <= 0 || height <= 0)
      throw Error("image dimensions must be positive");
    if (data_.size() !=
        static_cast<std::size_t>(width) * height * channels_for(cs))
      throw Error("pixel data length does not match dimensions");
  }

  static constexpr int channels_for(ColorSpace cs) {
    return cs == ColorSpace::Grayscale ? 1 : 3;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_for(color_space_); }
  ColorSpace color_space() const { return color_space_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels() + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels() + c];
  }

  BoundingBox frame() const { return {0, 0, width_, height_}; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ColorSpace color_space_ = ColorSpace::RGB;
  std::vector<std::uint8_t> data_;
};

inline ImageBuffer crop(const ImageBuffer& img, const BoundingBox& box) {
  const BoundingBox b = clip_box(box, img.width(), img.height());
  if (!b.valid()) throw Error("crop box has zero area inside the frame");
  const int ch = img.channels();
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(b.area()) * ch);
  for (int y = b.y_min; y < b.y_max; ++y) {
    const auto row = img.data().begin() +
                     (static_cast<std::ptrdiff_t>(y) * img.width() + b.x_min) * ch;
    out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(b.width()) * ch);
  }
  return ImageBuffer(b.width(), b.height(), img.color_space(), std::move(out));
}

// Zero-copy view for OpenCV calls. The buffer must outlive the Mat.
inline cv::Mat as_mat(const ImageBuffer& img) {
  return cv::Mat(img.height(), img.width(),
                 img.channels() == 1 ? CV_8UC1 : CV_8UC3,
                 const_cast<std::uint8_t*>(img.data().data()));
}

inline ImageBuffer from_mat(const cv::Mat& m, ColorSpace cs) {
  CV_Assert(m.depth() == CV_8U);
  CV_Assert(m.channels() == ImageBuffer::channels_for(cs));
  cv::Mat c = m.isContinuous() ? m : m.clone();
  std::vector<std::uint8_t> data(c.data, c.data + c.total() * c.channels());
  return ImageBuffer(c.cols, c.rows, cs, std::move(data));
}

// PNG decode. 1-channel files load as Grayscale, everything else as RGB.
inline ImageBuffer read_png(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot read image: " + path.string());
  if (m.depth() != CV_8U) m.convertTo(m, CV_8U, 1.0 / 257.0);
  if (m.channels() == 1) return from_mat(m, ColorSpace::Grayscale);
  cv::Mat rgb;
  if (m.channels() == 4)
    cv::cvtColor(m, rgb, cv::COLOR_BGRA2RGB);
  else
    cv::cvtColor(m, rgb, cv::COLOR_BGR2RGB);
  return from_mat(rgb, ColorSpace::RGB);
}

// PNG encode. Three-channel buffers are written with their channels in
// stored order (RGB for RGB images); other tags are written verbatim.
inline void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  cv::Mat m = as_mat(img);
  cv::Mat out;
  if (img.channels() == 3)
    cv::cvtColor(m, out, cv::COLOR_RGB2BGR);
  else
    out = m;
  if (!cv::imwrite(path.string(), out))
    throw IoError("cannot write image: " + path.string());
}

}  // namespace spy
