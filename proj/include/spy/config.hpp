// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pipeline configuration file (JSON). Every section is optional; unknown keys
// and wrong types are rejected with a JSON-pointer location.
//
//   {
//     "gamma":      {"enabled": false, "value": 0.8},
//     "roi":        {"enabled": false, "sigma": 3.3, "threshold": 10,
//                    "min_area": 200, "pad_frac": 0.05},
//     "color_space": "grayscale",
//     "provider":   {"kind": "geometric" | "replay", "path": "dets/"},
//     "geometric":  {"binarize": "background" | "highpass", ...},
//     "colors":     {"blue": {"min": [140, 80, 40], "max": [180, 255, 255]}, ...},
//     "texture":    {"lut": "lut.json"},
//     "syc":        {"suppress_body": false, "radiator_merge": true,
//                    "unknown_threshold": 0.5},
//     "fusion":     {"iou_threshold": 0.5, "body_source": "data_driven"},
//     "shapegen":   {"frame_size": 640, "collage": false, ..., "augment": {...}}
//   }

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "spy/error.hpp"
#include "spy/fusion.hpp"
#include "spy/preprocess.hpp"
#include "spy/scorers.hpp"
#include "spy/shapedetect.hpp"
#include "spy/shapegen.hpp"
#include "spy/syc.hpp"

namespace spy::config {

enum class ProviderKind { Geometric, Replay };

struct PipelineConfig {
  preprocess::PreprocessConfig preprocess;
  ProviderKind provider = ProviderKind::Geometric;
  std::filesystem::path replay_dir;
  detect::GeometricConfig geometric;
  scoring::ColorRangeConfig colors = scoring::ColorRangeConfig::defaults();
  std::optional<std::filesystem::path> texture_lut;
  syc::SycMode syc;
  fusion::FusionConfig fusion;
  shapegen::GenConfig shapegen;

  void validate() const {
    preprocess.validate();
    geometric.validate();
    colors.validate();
    fusion.validate();
    shapegen.validate();
    if (!(syc.unknown_threshold >= 0.0 && syc.unknown_threshold <= 1.0))
      throw ConfigError("syc.unknown_threshold must be in [0, 1]");
    if (provider == ProviderKind::Replay && !std::filesystem::is_directory(replay_dir))
      throw ConfigError("provider.path: replay directory does not exist: " +
                        replay_dir.string());
    if (texture_lut && !std::filesystem::is_regular_file(*texture_lut))
      throw ConfigError("texture.lut: file does not exist: " + texture_lut->string());
  }
};

namespace detail {

// Tracks which keys of one JSON object were consumed.
class Section {
 public:
  Section(const nlohmann::json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(ptr_ + "/" + key + ": wrong type");
    }
    return true;
  }

  std::optional<Section> section(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Section(j_.at(key), ptr_ + "/" + key);
  }

  const nlohmann::json* raw(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const std::string& key) const { return ptr_ + "/" + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.contains(k)) throw ConfigError("unknown key at " + ptr_ + "/" + k);
  }

 private:
  std::string where() const { return ptr_.empty() ? "/" : ptr_; }

  const nlohmann::json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

inline std::array<int, 3> hsv_triple(const nlohmann::json& j, const std::string& at) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(at + ": expected [h, s, v]");
  std::array<int, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!j[k].is_number_integer()) throw ConfigError(at + ": expected integers");
    out[k] = j[k].get<int>();
  }
  return out;
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& root) {
  PipelineConfig c;
  detail::Section top(root, "");

  if (auto s = top.section("gamma")) {
    s->get("enabled", c.preprocess.gamma_enabled);
    s->get("value", c.preprocess.gamma);
    s->finish();
  }
  if (auto s = top.section("roi")) {
    s->get("enabled", c.preprocess.roi_enabled);
    s->get("sigma", c.preprocess.roi_blur_sigma);
    s->get("threshold", c.preprocess.roi_threshold);
    s->get("min_area", c.preprocess.roi_min_area);
    s->get("pad_frac", c.preprocess.roi_pad_frac);
    s->finish();
  }
  if (std::string cs; top.get("color_space", cs))
    c.preprocess.target_color_space = color_space_from_string(cs);

  if (auto s = top.section("provider")) {
    std::string kind = "geometric";
    s->get("kind", kind);
    if (kind == "geometric")
      c.provider = ProviderKind::Geometric;
    else if (kind == "replay")
      c.provider = ProviderKind::Replay;
    else
      throw ConfigError(s->path("kind") + ": expected geometric or replay");
    std::string p;
    if (s->get("path", p)) c.replay_dir = p;
    if (c.provider == ProviderKind::Replay && p.empty())
      throw ConfigError(s->path("path") + ": required for the replay provider");
    s->finish();
  }

  if (auto s = top.section("geometric")) {
    auto& g = c.geometric;
    if (std::string b; s->get("binarize", b)) {
      if (b == "background")
        g.binarize = detect::GeometricConfig::Binarize::Background;
      else if (b == "highpass")
        g.binarize = detect::GeometricConfig::Binarize::HighPass;
      else
        throw ConfigError(s->path("binarize") + ": expected background or highpass");
    }
    s->get("background_threshold", g.background_threshold);
    s->get("highpass_sigma", g.highpass_sigma);
    s->get("highpass_threshold", g.highpass_threshold);
    s->get("epsilon_frac", g.epsilon_frac);
    s->get("circularity_min", g.circularity_min);
    s->get("right_angle_tol_deg", g.right_angle_tol_deg);
    s->get("min_area", g.min_area);
    s->get("min_hole_frac", g.min_hole_frac);
    s->finish();
  }

  if (auto s = top.section("colors")) {
    for (auto color : scoring::kNamedColors) {
      const std::string name(to_string(color));
      if (auto r = s->section(name)) {
        if (auto* mn = r->raw("min")) c.colors[color].min = detail::hsv_triple(*mn, r->path("min"));
        if (auto* mx = r->raw("max")) c.colors[color].max = detail::hsv_triple(*mx, r->path("max"));
        r->finish();
      }
    }
    s->finish();
  }

  if (auto s = top.section("texture")) {
    if (std::string p; s->get("lut", p)) c.texture_lut = p;
    s->finish();
  }

  if (auto s = top.section("syc")) {
    s->get("suppress_body", c.syc.suppress_body);
    s->get("radiator_merge", c.syc.radiator_merge);
    s->get("unknown_threshold", c.syc.unknown_threshold);
    s->finish();
  }

  if (auto s = top.section("fusion")) {
    s->get("iou_threshold", c.fusion.iou_threshold);
    if (std::string b; s->get("body_source", b))
      c.fusion.body_source = fusion::body_source_from_string(b);
    s->finish();
  }

  if (auto s = top.section("shapegen")) {
    auto& g = c.shapegen;
    s->get("frame_size", g.frame_size);
    s->get("collage", g.collage);
    s->get("collage_min", g.collage_min);
    s->get("collage_max", g.collage_max);
    s->get("max_iou", g.max_iou);
    s->get("placement_gap", g.placement_gap);
    if (std::vector<int> bgs; s->get("backgrounds", bgs)) {
      g.backgrounds.clear();
      for (int v : bgs) {
        if (v < 0 || v > 255) throw ConfigError(s->path("backgrounds") + ": values must be in [0, 255]");
        g.backgrounds.push_back(static_cast<std::uint8_t>(v));
      }
    }
    s->get("contrast_margin", g.contrast_margin);
    s->get("max_placement_attempts", g.max_placement_attempts);
    if (auto a = s->section("augment")) {
      auto& ag = g.augment;
      a->get("rotation", ag.rotation);
      a->get("max_rotation_deg", ag.max_rotation_deg);
      a->get("shear", ag.shear);
      a->get("max_shear_deg", ag.max_shear_deg);
      a->get("blur", ag.blur);
      a->get("max_blur_sigma", ag.max_blur_sigma);
      a->get("noise", ag.noise);
      a->get("max_noise_sigma", ag.max_noise_sigma);
      a->get("min_label_area", ag.min_label_area);
      a->get("resample_on_small_label", ag.resample_on_small_label);
      a->finish();
    }
    s->finish();
  }

  top.finish();
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace spy::config
