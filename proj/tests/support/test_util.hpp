// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "spy/core.hpp"
#include "spy/image.hpp"

namespace spy::tst {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "spy") {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline BoundingBox random_box(std::mt19937_64& rng, int w, int h, int min_side = 1) {
  std::uniform_int_distribution<int> ux(0, w - min_side), uy(0, h - min_side);
  const int x0 = ux(rng), y0 = uy(rng);
  std::uniform_int_distribution<int> ex(x0 + min_side, w), ey(y0 + min_side, h);
  return {x0, y0, ex(rng), ey(rng)};
}

inline ImageBuffer solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageBuffer img(w, h, ColorSpace::RGB);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.data()[3 * i] = r;
    img.data()[3 * i + 1] = g;
    img.data()[3 * i + 2] = b;
  }
  return img;
}

inline void fill_rect(ImageBuffer& img, const BoundingBox& b, std::uint8_t r, std::uint8_t g,
                      std::uint8_t bl) {
  for (int y = b.y_min; y < b.y_max; ++y)
    for (int x = b.x_min; x < b.x_max; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = bl;
    }
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spy::tst
