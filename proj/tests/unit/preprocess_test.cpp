// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spy/preprocess.hpp"
#include "test_util.hpp"

using namespace spy;
using namespace spy::preprocess;

TEST(Gamma, Examples) {
  const auto t = gamma_table(0.8);
  EXPECT_EQ(t[0], 0);
  EXPECT_EQ(t[255], 255);
  EXPECT_EQ(t[128], 147);  // 255 * (128/255)^0.8 = 146.92
  for (double g : {0.3, 1.7, 4.0}) {
    EXPECT_EQ(gamma_table(g)[0], 0);
    EXPECT_EQ(gamma_table(g)[255], 255);
  }
}

TEST(Gamma, MatchesFormulaMonotoneAndIdentityAtOne) {
  for (double g : {0.5, 0.8, 1.0, 2.2}) {
    const auto t = gamma_table(g);
    for (int v = 0; v < 256; ++v) {
      EXPECT_EQ(t[v], std::lround(255.0 * std::pow(v / 255.0, g)));
      if (v > 0) {
        EXPECT_GE(t[v], t[v - 1]);
      }
      if (g == 1.0) {
        EXPECT_EQ(t[v], v);
      }
    }
  }
}

TEST(Gamma, RejectsNonPositive) {
  const ImageBuffer img(4, 4, ColorSpace::Grayscale, 10);
  EXPECT_THROW(gamma_correct(img, 0.0), ConfigError);
  EXPECT_THROW(gamma_correct(img, -1.0), ConfigError);
}

TEST(Gamma, AppliesPerChannelAndKeepsTag) {
  const auto img = tst::solid_rgb(3, 2, 128, 0, 255);
  const auto out = gamma_correct(img, 0.8);
  EXPECT_EQ(out.color_space(), ColorSpace::RGB);
  EXPECT_EQ(out.at(1, 1, 0), 147);
  EXPECT_EQ(out.at(1, 1, 1), 0);
  EXPECT_EQ(out.at(1, 1, 2), 255);
}

TEST(ColorSpace, Examples) {
  const auto hsv = convert_color_space(tst::solid_rgb(1, 1, 255, 0, 0), ColorSpace::HSV);
  EXPECT_EQ(hsv.at(0, 0, 0), 0);
  EXPECT_EQ(hsv.at(0, 0, 1), 255);
  EXPECT_EQ(hsv.at(0, 0, 2), 255);

  const auto gray = convert_color_space(tst::solid_rgb(1, 1, 128, 128, 128), ColorSpace::HSV);
  EXPECT_EQ(gray.at(0, 0, 1), 0);
  EXPECT_EQ(gray.at(0, 0, 2), 128);

  const auto white = convert_color_space(tst::solid_rgb(1, 1, 255, 255, 255), ColorSpace::Grayscale);
  EXPECT_EQ(white.at(0, 0), 255);
}

TEST(ColorSpace, HueScaleAndLuma) {
  // Pure blue is 240 degrees -> round(240 * 255 / 360) = 170.
  const auto blue = convert_color_space(tst::solid_rgb(1, 1, 0, 0, 255), ColorSpace::HSV);
  EXPECT_EQ(blue.at(0, 0, 0), 170);
  // Green at 120 degrees -> 85.
  const auto green = convert_color_space(tst::solid_rgb(1, 1, 0, 255, 0), ColorSpace::HSV);
  EXPECT_EQ(green.at(0, 0, 0), 85);
  // BT.601 luma of (10, 200, 30): 2.99 + 117.4 + 3.42 = 123.81 -> 124.
  const auto g = convert_color_space(tst::solid_rgb(1, 1, 10, 200, 30), ColorSpace::Grayscale);
  EXPECT_EQ(g.at(0, 0), 124);
}

TEST(ColorSpace, AchromaticHasZeroSaturationAndGrayIdempotent) {
  for (int v = 0; v < 256; ++v) {
    const auto px = tst::solid_rgb(1, 1, v, v, v);
    EXPECT_EQ(convert_color_space(px, ColorSpace::HSV).at(0, 0, 1), 0);
    const auto g = convert_color_space(px, ColorSpace::Grayscale);
    EXPECT_EQ(g.at(0, 0), v);
    EXPECT_EQ(convert_color_space(g, ColorSpace::Grayscale), g);
  }
}

TEST(ColorSpace, RoundTripsThroughRgbStayClose) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto px = tst::solid_rgb(1, 1, rng() % 256, rng() % 256, rng() % 256);
    for (auto cs : {ColorSpace::HSV, ColorSpace::YCbCr}) {
      const auto back = convert_color_space(convert_color_space(px, cs), ColorSpace::RGB);
      for (int c = 0; c < 3; ++c)
        EXPECT_NEAR(back.at(0, 0, c), px.at(0, 0, c), cs == ColorSpace::HSV ? 4 : 2);
    }
  }
}

TEST(ColorSpace, GrayscaleSourceOnlyToRgb) {
  const ImageBuffer g(2, 2, ColorSpace::Grayscale, 77);
  const auto rgb = convert_color_space(g, ColorSpace::RGB);
  EXPECT_EQ(rgb.at(1, 1, 2), 77);
  try {
    convert_color_space(g, ColorSpace::HSV);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("grayscale -> hsv"), std::string::npos);
  }
}

namespace {

ImageBuffer black_with(std::initializer_list<BoundingBox> boxes, int size = 640) {
  ImageBuffer img(size, size, ColorSpace::RGB, 0);
  for (const auto& b : boxes) tst::fill_rect(img, b, 255, 255, 255);
  return img;
}

PreprocessConfig roi_cfg() {
  PreprocessConfig c;
  c.roi_enabled = true;
  return c;
}

}  // namespace

TEST(Roi, UniformFrameFallsBackToFullFrame) {
  const auto r = extract_roi(ImageBuffer(640, 640, ColorSpace::RGB, 0), roi_cfg());
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.box, (BoundingBox{0, 0, 640, 640}));
}

TEST(Roi, ContainsCenteredSquare) {
  const BoundingBox sq{270, 270, 370, 370};
  const auto r = extract_roi(black_with({sq}), roi_cfg());
  EXPECT_FALSE(r.fallback);
  EXPECT_TRUE(r.box.contains(sq));
  EXPECT_LT(r.box.area(), 640 * 640);
  EXPECT_EQ(r.crop.width(), r.box.width());
}

TEST(Roi, IgnoresSubMinimumSpeck) {
  const BoundingBox obj{100, 100, 200, 180};
  const BoundingBox speck{600, 600, 602, 602};
  const auto r = extract_roi(black_with({obj, speck}), roi_cfg());
  EXPECT_TRUE(r.box.contains(obj));
  EXPECT_FALSE(r.box.contains(speck));
}

TEST(Roi, CoversEveryShapeAboveMinimumArea) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<BoundingBox> boxes;
    ImageBuffer img(640, 640, ColorSpace::RGB, 0);
    for (int k = 0; k < 3; ++k) {
      const int x = 5 + rng() % 560, y = 5 + rng() % 560;
      const BoundingBox b{x, y, x + 20 + static_cast<int>(rng() % 50), y + 20 + static_cast<int>(rng() % 50)};
      const auto c = clip_box(b, 640, 640);
      tst::fill_rect(img, c, 200, 200, 200);
      boxes.push_back(c);
    }
    const auto r = extract_roi(img, roi_cfg());
    EXPECT_GT(r.box.area(), 0);
    EXPECT_TRUE(img.frame().contains(r.box));
    EXPECT_TRUE(check_roi_covers_ground_truth(r.box, boxes).covered);
  }
}

TEST(RoiCoverage, Examples) {
  const std::vector<BoundingBox> gts{{50, 50, 150, 150}};
  EXPECT_TRUE(check_roi_covers_ground_truth({0, 0, 640, 640}, gts).covered);
  EXPECT_TRUE(check_roi_covers_ground_truth({0, 0, 100, 100}, {}).covered);
  const auto c = check_roi_covers_ground_truth({0, 0, 100, 100}, gts);
  EXPECT_FALSE(c.covered);
  ASSERT_EQ(c.violations.size(), 1u);
  EXPECT_EQ(c.violations[0], gts[0]);
}

TEST(Run, AppliesBlocksInOrder) {
  PreprocessConfig c = roi_cfg();
  c.gamma_enabled = true;
  c.target_color_space = ColorSpace::HSV;
  const auto out = run(black_with({{200, 200, 300, 300}}), c);
  EXPECT_EQ(out.image.color_space(), ColorSpace::HSV);
  EXPECT_EQ(out.image.width(), out.roi.width());
  EXPECT_TRUE(out.roi.contains({200, 200, 300, 300}));
}

TEST(Config, Validation) {
  PreprocessConfig c;
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.roi_blur_sigma = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}
