// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "spy/pipeline.hpp"
#include "test_util.hpp"

using namespace spy;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    config::parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = config::parse_config(json::object());
  EXPECT_EQ(c.provider, config::ProviderKind::Geometric);
  EXPECT_FALSE(c.texture_lut.has_value());
  EXPECT_DOUBLE_EQ(c.syc.unknown_threshold, 0.5);
  EXPECT_TRUE(c.syc.radiator_merge);
  EXPECT_DOUBLE_EQ(c.fusion.iou_threshold, 0.5);
}

TEST(Config, ParsesSections) {
  const json j = {{"gamma", {{"enabled", true}, {"value", 0.7}}},
                  {"color_space", "hsv"},
                  {"colors", {{"blue", {{"min", {100, 50, 50}}, {"max", {190, 255, 255}}}}}},
                  {"syc", {{"suppress_body", true}}},
                  {"fusion", {{"body_source", "context"}}},
                  {"shapegen", {{"collage", true}, {"augment", {{"noise", true}}}}}};
  const auto c = config::parse_config(j);
  EXPECT_TRUE(c.preprocess.gamma_enabled);
  EXPECT_DOUBLE_EQ(c.preprocess.gamma, 0.7);
  EXPECT_EQ(c.preprocess.target_color_space, ColorSpace::HSV);
  EXPECT_EQ(c.colors[scoring::NamedColor::Blue].min[0], 100);
  EXPECT_TRUE(c.syc.suppress_body);
  EXPECT_EQ(c.fusion.body_source, fusion::BodySource::Context);
  EXPECT_TRUE(c.shapegen.augment.noise);
}

TEST(Config, UnknownKeysReportedWithLocation) {
  EXPECT_EQ(config_error({{"gama", 1}}), "unknown key at /gama");
  EXPECT_EQ(config_error({{"syc", {{"supress_body", true}}}}), "unknown key at /syc/supress_body");
  EXPECT_EQ(config_error({{"colors", {{"blue", {{"mid", {1, 2, 3}}}}}}}), "unknown key at /colors/blue/mid");
  EXPECT_EQ(config_error({{"shapegen", {{"augment", {{"spin", true}}}}}}),
            "unknown key at /shapegen/augment/spin");
}

TEST(Config, TypeAndValueErrors) {
  EXPECT_EQ(config_error({{"gamma", {{"value", "high"}}}}), "/gamma/value: wrong type");
  EXPECT_NE(config_error({{"gamma", {{"value", 0.0}}}}), "");
  EXPECT_NE(config_error({{"colors", {{"white", {{"min", {1, 2}}}}}}}).find("/colors/white/min"),
            std::string::npos);
  EXPECT_NE(config_error({{"provider", {{"kind", "replay"}}}}).find("/provider/path"), std::string::npos);
  EXPECT_NE(config_error({{"syc", {{"unknown_threshold", 1.5}}}}), "");
}

TEST(Config, MissingPathsFailFast) {
  EXPECT_NE(config_error({{"texture", {{"lut", "/nonexistent/lut.json"}}}}).find("texture.lut"),
            std::string::npos);
  EXPECT_NE(config_error({{"provider", {{"kind", "replay"}, {"path", "/nonexistent/dir"}}}}), "");
  EXPECT_THROW(config::load_config("/nonexistent/config.json"), ConfigError);
  tst::TempDir d;
  tst::write_text(d / "bad.json", "{ not json");
  EXPECT_THROW(config::load_config(d / "bad.json"), ConfigError);
}

TEST(Pipeline, BlueRectangleDetectedAndClassifiedInOriginalFrame) {
  auto img = tst::solid_rgb(320, 240, 0, 0, 0);
  tst::fill_rect(img, {100, 80, 220, 150}, 25, 60, 170);
  auto cfg = config::parse_config({{"roi", {{"enabled", true}}}});
  const pipeline::Pipeline p(cfg);
  const auto r = p.process(img);
  ASSERT_EQ(r.shapes.size(), 1u);
  EXPECT_EQ(r.shapes[0].label, ShapeClass::Rectangle);
  EXPECT_GT(iou(r.shapes[0].box, {100, 80, 220, 150}), 0.9);
  ASSERT_EQ(r.components.size(), 1u);
  EXPECT_EQ(r.components[0].label, ComponentClass::Solar);
}

TEST(Pipeline, BatchCollectsFailuresAndContinues) {
  tst::TempDir d;
  std::filesystem::create_directories(d / "images");
  auto img = tst::solid_rgb(100, 100, 0, 0, 0);
  tst::fill_rect(img, {20, 20, 70, 60}, 25, 60, 170);
  write_png(d / "images/good.png", img);
  tst::write_text(d / "images/broken.png", "not a png");
  const pipeline::Pipeline p(config::parse_config(json::object()));
  std::vector<std::string> log;
  const auto s = pipeline::run_batch(p, {d / "images", d / "out", d / "shapes", d / "overlay", 2},
                                     [&](const std::string& l) { log.push_back(l); });
  EXPECT_EQ(s.processed, 1u);
  ASSERT_EQ(s.failures.size(), 1u);
  EXPECT_EQ(s.failures[0].first, "broken");
  EXPECT_EQ(log.size(), 1u);
  const auto dets = io::read_detections(d / "out/good.txt");
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].box.class_id, static_cast<int>(ComponentClass::Solar));
  EXPECT_TRUE(std::filesystem::exists(d / "shapes/good.txt"));
  EXPECT_TRUE(std::filesystem::exists(d / "overlay/good.png"));
}
