// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "spy/annotation_io.hpp"
#include "spy/config.hpp"
#include "spy/image.hpp"
#include "spy/parallel.hpp"
#include "spy/preprocess.hpp"
#include "spy/shapedetect.hpp"
#include "spy/syc.hpp"

namespace spy::pipeline {

struct ImageResult {
  BoundingBox roi;
  std::vector<ShapeDetection> shapes;  // original-frame coordinates
  std::vector<ComponentDetection> components;
};

// Preprocess -> shape detection -> SYC classification on the original frame.
class Pipeline {
 public:
  explicit Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.provider == config::ProviderKind::Replay)
      provider_ = std::make_unique<detect::ReplayProvider>(cfg_.replay_dir);
    else
      provider_ = std::make_unique<detect::GeometricProvider>(cfg_.geometric);
    scorers_.colors = cfg_.colors;
    if (cfg_.texture_lut) scorers_.lut = scoring::TextureLUT::load(*cfg_.texture_lut);
  }

  Pipeline(config::PipelineConfig cfg, std::unique_ptr<detect::ShapeDetectionProvider> provider,
           syc::Scorers scorers)
      : cfg_(std::move(cfg)), provider_(std::move(provider)), scorers_(std::move(scorers)) {}

  const config::PipelineConfig& config() const { return cfg_; }
  const syc::Scorers& scorers() const { return scorers_; }

  ImageResult process(const ImageBuffer& original, std::string_view stem = {}) const {
    const preprocess::Preprocessed pre = preprocess::run(original, cfg_.preprocess);
    ImageResult r;
    r.roi = pre.roi;
    for (auto d : detect::detect_shapes(*provider_, pre.image, stem)) {
      d.box = {d.box.x_min + pre.roi.x_min, d.box.y_min + pre.roi.y_min,
               d.box.x_max + pre.roi.x_min, d.box.y_max + pre.roi.y_min};
      r.shapes.push_back(d);
    }
    r.components = syc::classify_detections(r.shapes, original, scorers_, cfg_.syc);
    return r;
  }

 private:
  config::PipelineConfig cfg_;
  std::unique_ptr<detect::ShapeDetectionProvider> provider_;
  syc::Scorers scorers_;
};

// ---------------------------------------------------------------------------
// Overlays

inline cv::Scalar overlay_color(ComponentClass c) {  // BGR
  switch (c) {
    case ComponentClass::Antenna: return {0, 200, 255};
    case ComponentClass::Body: return {0, 255, 0};
    case ComponentClass::Solar: return {255, 128, 0};
    case ComponentClass::Thruster: return {0, 0, 255};
    case ComponentClass::WhiteRadiator: return {255, 255, 255};
    case ComponentClass::Unknown: return {255, 0, 255};
  }
  return {255, 255, 255};
}

inline void write_overlay(const std::filesystem::path& path, const ImageBuffer& original,
                          const std::vector<ComponentDetection>& dets) {
  const ImageBuffer rgb = preprocess::convert_color_space(original, ColorSpace::RGB);
  cv::Mat bgr;
  cv::cvtColor(as_mat(rgb), bgr, cv::COLOR_RGB2BGR);
  for (const auto& d : dets) {
    const cv::Rect r(d.box.x_min, d.box.y_min, d.box.width(), d.box.height());
    const cv::Scalar col = overlay_color(d.label);
    cv::rectangle(bgr, r, col, 2);
    char text[64];
    std::snprintf(text, sizeof text, "%s %.2f", std::string(to_string(d.label)).c_str(),
                  d.confidence);
    cv::putText(bgr, text, {r.x, std::max(12, r.y - 4)}, cv::FONT_HERSHEY_SIMPLEX, 0.45, col,
                1, cv::LINE_AA);
  }
  if (!cv::imwrite(path.string(), bgr)) throw IoError("cannot write overlay " + path.string());
}

// ---------------------------------------------------------------------------
// Directory batch

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// Stem -> image path, sorted by stem.
inline std::map<std::string, std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) {
      const auto stem = e.path().stem().string();
      if (out.contains(stem)) throw IoError("duplicate image stem '" + stem + "' in " + dir.string());
      out[stem] = e.path();
    }
  return out;
}

struct BatchOptions {
  std::filesystem::path images;
  std::filesystem::path out;                       // component detections
  std::optional<std::filesystem::path> shapes_out;  // shape detections
  std::optional<std::filesystem::path> overlays;
  int jobs = 1;
};

struct BatchSummary {
  std::size_t processed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // stem, message
};

// Per-image failures are collected and the batch continues. `log` receives
// one line per failure in stem order.
inline BatchSummary run_batch(const Pipeline& p, const BatchOptions& o,
                              const std::function<void(const std::string&)>& log = {}) {
  const auto images = list_images(o.images);
  std::filesystem::create_directories(o.out);
  if (o.shapes_out) std::filesystem::create_directories(*o.shapes_out);
  if (o.overlays) std::filesystem::create_directories(*o.overlays);

  std::vector<std::pair<std::string, std::filesystem::path>> items(images.begin(), images.end());
  std::vector<std::string> errors(items.size());
  parallel_for(items.size(), o.jobs, [&](std::size_t i) {
    const auto& [stem, path] = items[i];
    try {
      const ImageBuffer img = read_png(path);
      const ImageResult r = p.process(img, stem);
      io::write_detections(o.out / (stem + ".txt"),
                           io::to_records(r.components, img.width(), img.height()));
      if (o.shapes_out)
        io::write_detections(*o.shapes_out / (stem + ".txt"),
                             io::to_records(r.shapes, img.width(), img.height()));
      if (o.overlays) write_overlay(*o.overlays / (stem + ".png"), img, r.components);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  });

  BatchSummary s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (errors[i].empty()) {
      ++s.processed;
      continue;
    }
    s.failures.emplace_back(items[i].first, errors[i]);
    if (log) log(items[i].first + ": " + errors[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Texture calibration from an annotated image directory

inline std::vector<scoring::TextureSample> collect_texture_samples(
    const std::filesystem::path& images_dir, const std::filesystem::path& labels_dir,
    int jobs = 1) {
  const auto images = list_images(images_dir);
  const auto labels = io::files_by_stem(labels_dir, ".txt");
  std::vector<std::pair<std::string, std::filesystem::path>> items;
  for (const auto& [stem, path] : labels) {
    auto it = images.find(stem);
    if (it == images.end()) throw IoError("label file without image: " + path.string());
    items.emplace_back(stem, path);
  }
  std::vector<std::vector<scoring::TextureSample>> per(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const ImageBuffer img = read_png(images.at(items[i].first));
    const ImageBuffer gray = preprocess::intensity_plane(img);
    const auto gts =
        io::labels_to_pixel<ComponentClass>(io::read_labels(items[i].second), img.width(), img.height());
    for (const auto& g : gts) {
      if (g.label == ComponentClass::WhiteRadiator || g.label == ComponentClass::Unknown) continue;
      per[i].push_back(scoring::texture_sample(crop(gray, g.box), g.label));
    }
  });
  std::vector<scoring::TextureSample> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace spy::pipeline
