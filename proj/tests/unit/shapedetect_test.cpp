// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spy/shapedetect.hpp"
#include "spy/shapegen.hpp"
#include "test_util.hpp"

using namespace spy;
using namespace spy::detect;

namespace {

class FixedProvider final : public ShapeDetectionProvider {
 public:
  explicit FixedProvider(std::vector<ShapeDetection> d) : d_(std::move(d)) {}
  std::vector<ShapeDetection> detect(const ImageBuffer&, std::string_view) const override {
    return d_;
  }

 private:
  std::vector<ShapeDetection> d_;
};

shapegen::Frame single(ShapeClass shape, double r, double inner = 0) {
  shapegen::ShapeSpec s;
  s.shape = shape;
  s.cx = s.cy = 320;
  s.radius = r;
  s.inner_radius = inner;
  s.width = 2 * r;
  s.height = r;
  s.side = 2 * r;
  s.fill = 230;
  return shapegen::render_frame(640, 30, {s});
}

}  // namespace

TEST(DetectShapes, ClipsAndClamps) {
  const FixedProvider p({{{-10, -10, 50, 50}, ShapeClass::Circle, 1.7},
                         {{700, 700, 800, 800}, ShapeClass::Ring, 0.5}});
  const auto out = detect_shapes(p, ImageBuffer(100, 100, ColorSpace::Grayscale, 0));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].box, (BoundingBox{0, 0, 50, 50}));
  EXPECT_DOUBLE_EQ(out[0].confidence, 1.0);
}

TEST(Replay, ReadsStemFileAndFailsOnMissing) {
  tst::TempDir d;
  tst::write_text(d / "img1.txt", "2 0.9 0.5 0.5 0.2 0.2\n");
  const ReplayProvider p(d.path());
  const ImageBuffer img(100, 100, ColorSpace::RGB, 0);
  const auto out = detect_shapes(p, img, "img1");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].label, ShapeClass::Triangle);
  EXPECT_EQ(out[0].box, (BoundingBox{40, 40, 60, 60}));
  EXPECT_THROW(detect_shapes(p, img, "img2"), MissingDetections);
  EXPECT_THROW(ReplayProvider(d / "nope"), ConfigError);
}

TEST(Geometric, FindsEachPristineShape) {
  const GeometricProvider p;
  const struct {
    ShapeClass shape;
    double inner;
  } cases[] = {{ShapeClass::Circle, 0}, {ShapeClass::Rectangle, 0},
               {ShapeClass::Triangle, 0}, {ShapeClass::Ring, 30}};
  for (const auto& c : cases) {
    const auto f = single(c.shape, 60, c.inner);
    const auto out = detect_shapes(p, f.image);
    ASSERT_EQ(out.size(), 1u) << to_string(c.shape);
    EXPECT_EQ(out[0].label, c.shape);
    EXPECT_GT(iou(out[0].box, f.labels[0].box), 0.9);
  }
}

TEST(Geometric, BlankFrameGivesNothing) {
  EXPECT_TRUE(detect_shapes(GeometricProvider{}, ImageBuffer(200, 200, ColorSpace::RGB, 90)).empty());
}

TEST(Geometric, ConfigValidation) {
  GeometricConfig c;
  c.epsilon_frac = 0;
  EXPECT_THROW(GeometricProvider{c}, ConfigError);
}

TEST(SdOverlap, Examples) {
  const std::vector<BoundingBox> gt{{0, 0, 10, 10}};
  EXPECT_DOUBLE_EQ(sd_overlap(gt, gt, 20, 20).value, 1.0);
  const std::vector<BoundingBox> far{{12, 12, 20, 20}};
  EXPECT_DOUBLE_EQ(sd_overlap(gt, far, 20, 20).value, 0.0);
  const std::vector<BoundingBox> half{{0, 0, 5, 10}};
  EXPECT_DOUBLE_EQ(sd_overlap(gt, half, 20, 20).value, 0.5);
  const auto v = sd_overlap({}, half, 20, 20);
  EXPECT_TRUE(v.vacuous);
  EXPECT_DOUBLE_EQ(v.value, 1.0);
}

TEST(SdOverlap, BoundedMonotoneDuplicateFreeAndMatchesPixelOracle) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    std::vector<BoundingBox> gts, preds;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 3); ++k) gts.push_back(tst::random_box(rng, 48, 48));
    for (int k = 0; k < static_cast<int>(rng() % 4); ++k) preds.push_back(tst::random_box(rng, 48, 48));
    const double v = sd_overlap(gts, preds, 48, 48).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v, oracle::pixel_overlap(gts, preds, 48, 48));
    auto more = preds;
    more.push_back(tst::random_box(rng, 48, 48));
    EXPECT_GE(sd_overlap(gts, more, 48, 48).value, v);
    if (!preds.empty()) {
      auto dup = preds;
      dup.push_back(preds[0]);
      EXPECT_EQ(sd_overlap(gts, dup, 48, 48).value, v);
    }
  }
}

TEST(BatchSdOverlap, MeanAndCenters) {
  std::map<std::string, OverlapFrame> gts{{"a", {20, 20, {{0, 0, 10, 10}}}},
                                          {"b", {20, 20, {{0, 0, 10, 10}}}}};
  std::map<std::string, OverlapFrame> preds{{"a", {20, 20, {{0, 0, 10, 10}}}},
                                            {"b", {20, 20, {{12, 12, 20, 20}}}}};
  const auto r = batch_sd_overlap(gts, preds);
  EXPECT_DOUBLE_EQ(r.mean, 0.5);
  EXPECT_EQ(r.inside, 1);
  EXPECT_EQ(r.outside, 1);
  preds.erase("b");
  EXPECT_THROW(batch_sd_overlap(gts, preds), Error);
}
