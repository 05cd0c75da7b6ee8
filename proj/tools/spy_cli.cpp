// SPDX-License-Identifier: Apache-2.0
//
// spy: dataset generation, texture calibration, detection + classification,
// fusion and evaluation.
//
// Exit codes: 0 success, 1 processing failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "spy/spy.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::string config_path;
  int jobs = 0;
  std::uint64_t seed = 0;

  int effective_jobs() const {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
  }

  spy::config::PipelineConfig load() const {
    return config_path.empty() ? spy::config::parse_config(nlohmann::json::object())
                               : spy::config::load_config(config_path);
  }
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// Frame dimensions used to convert normalized records to pixels: either a
// fixed size or the size of the same-stem image in a directory.
struct FrameSizer {
  int width = 640;
  int height = 640;
  std::optional<std::map<std::string, fs::path>> images;

  std::pair<int, int> size_of(const std::string& stem) const {
    if (!images) return {width, height};
    auto it = images->find(stem);
    if (it == images->end()) throw spy::IoError("no image for stem '" + stem + "'");
    const spy::ImageBuffer img = spy::read_png(it->second);
    return {img.width(), img.height()};
  }
};

void add_sizer_options(CLI::App* cmd, FrameSizer& sizer, std::string& images_dir) {
  cmd->add_option("--width", sizer.width, "Frame width for normalized boxes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--height", sizer.height, "Frame height for normalized boxes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--images", images_dir, "Take frame sizes from same-stem images")
      ->check(CLI::ExistingDirectory);
}

void resolve_sizer(FrameSizer& sizer, const std::string& images_dir) {
  if (!images_dir.empty()) sizer.images = spy::pipeline::list_images(images_dir);
}

// ---------------------------------------------------------------------------

struct ShapegenArgs {
  std::string out;
  int count = 0;
  bool collage = false;
  std::optional<int> frame_size;
  bool rotation = false, shear = false, blur = false, noise = false;
};

int cmd_shapegen(const Globals& g, const ShapegenArgs& a) {
  spy::shapegen::GenConfig cfg = g.load().shapegen;
  cfg.count = a.count;
  cfg.seed = g.seed;
  if (a.collage) cfg.collage = true;
  if (a.frame_size) cfg.frame_size = *a.frame_size;
  cfg.augment.rotation |= a.rotation;
  cfg.augment.shear |= a.shear;
  cfg.augment.blur |= a.blur;
  cfg.augment.noise |= a.noise;
  cfg.validate();
  const auto m = spy::shapegen::generate_dataset(cfg, a.out, g.effective_jobs());
  std::printf("wrote %zu frame(s) to %s\n", m.frames, a.out.c_str());
  for (auto s : spy::kShapeClasses)
    std::printf("  %-9s %zu\n", std::string(spy::to_string(s)).c_str(),
                m.per_class[static_cast<int>(s)]);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string images, labels, out;
  std::string bin_rule = "count";
};

int cmd_calibrate(const Globals& g, const CalibrateArgs& a) {
  const auto rule = spy::scoring::bin_rule_from_string(a.bin_rule);
  const auto samples = spy::pipeline::collect_texture_samples(a.images, a.labels, g.effective_jobs());
  const auto lut = spy::scoring::calibrate_texture_lut(samples, rule);
  lut.save(a.out);
  std::printf("calibrated texture LUT from %zu crop(s) -> %s\n", samples.size(), a.out.c_str());
  for (auto c : spy::kTextureClasses)
    std::printf("  %-9s n=%-6zu variance bins=%-5d entropy bins=%d\n",
                std::string(spy::to_string(c)).c_str(), lut.object_count(c),
                lut.table(spy::scoring::TextureMetric::Variance, c).bins(),
                lut.table(spy::scoring::TextureMetric::Entropy, c).bins());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string images, out, shapes, overlay;
};

int cmd_run(const Globals& g, const RunArgs& a) {
  const spy::pipeline::Pipeline p(g.load());
  if (!p.config().texture_lut) warn("no texture.lut configured; texture scores will be zero");
  spy::pipeline::BatchOptions o;
  o.images = a.images;
  o.out = a.out;
  if (!a.shapes.empty()) o.shapes_out = a.shapes;
  if (!a.overlay.empty()) o.overlays = a.overlay;
  o.jobs = g.effective_jobs();
  if (spy::pipeline::list_images(o.images).empty()) {
    warn("no images in " + a.images);
    fs::create_directories(o.out);
    return kExitOk;
  }
  const auto s = spy::pipeline::run_batch(p, o, [](const std::string& m) {
    std::cerr << "error: " << m << '\n';
  });
  std::printf("processed %zu image(s), %zu failure(s)\n", s.processed, s.failures.size());
  return s.failures.empty() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

struct FuseArgs {
  std::string yolo, spy, out, images;
  FrameSizer sizer;
};

std::string stem_mismatch(const std::map<std::string, fs::path>& a, const std::string& a_name,
                          const std::map<std::string, fs::path>& b, const std::string& b_name) {
  std::string msg;
  for (const auto& [s, _] : a)
    if (!b.contains(s)) msg += " " + s + " (only in " + a_name + ")";
  for (const auto& [s, _] : b)
    if (!a.contains(s)) msg += " " + s + " (only in " + b_name + ")";
  return msg;
}

int cmd_fuse(const Globals& g, FuseArgs& a) {
  const auto cfg = g.load();
  resolve_sizer(a.sizer, a.images);
  const auto yolo = spy::io::files_by_stem(a.yolo, ".txt");
  const auto spyd = spy::io::files_by_stem(a.spy, ".txt");
  if (auto m = stem_mismatch(yolo, "--yolo", spyd, "--spy"); !m.empty())
    throw spy::Error("unmatched stems:" + m);
  fs::create_directories(a.out);
  std::size_t total = 0;
  for (const auto& [stem, ypath] : yolo) {
    const auto [w, h] = a.sizer.size_of(stem);
    const auto yd = spy::io::to_pixel_detections<spy::ComponentClass>(spy::io::read_detections(ypath), w, h);
    const auto sd = spy::io::to_pixel_detections<spy::ComponentClass>(
        spy::io::read_detections(spyd.at(stem)), w, h);
    const auto fused = spy::fusion::fuse(yd, sd, cfg.fusion);
    total += fused.size();
    spy::io::write_detections(fs::path(a.out) / (stem + ".txt"), spy::io::to_records(fused, w, h));
  }
  std::printf("fused %zu frame(s), %zu detection(s) -> %s\n", yolo.size(), total, a.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string detections, labels, shape_dets, report, images;
  double iou = 0.5;
  FrameSizer sizer;
};

int cmd_eval(const Globals& g, EvalArgs& a) {
  resolve_sizer(a.sizer, a.images);
  const auto labels = spy::io::files_by_stem(a.labels, ".txt");
  const auto dets = spy::io::files_by_stem(a.detections, ".txt");
  for (const auto& [stem, path] : dets)
    if (!labels.contains(stem)) throw spy::Error("detections without labels: " + path.string());

  std::optional<std::map<std::string, fs::path>> shapes;
  if (!a.shape_dets.empty()) shapes = spy::io::files_by_stem(a.shape_dets, ".txt");

  std::vector<spy::eval::ImageEval> images;
  std::map<std::string, spy::detect::OverlapFrame> ov_gt, ov_pred;
  for (const auto& [stem, lpath] : labels) {
    const auto [w, h] = a.sizer.size_of(stem);
    spy::eval::ImageEval im;
    im.stem = stem;
    im.gts = spy::io::labels_to_pixel<spy::ComponentClass>(spy::io::read_labels(lpath), w, h);
    if (auto it = dets.find(stem); it != dets.end())
      im.dets = spy::io::to_pixel_detections<spy::ComponentClass>(spy::io::read_detections(it->second), w, h);
    else
      warn("no detection file for '" + stem + "'; counted as empty");
    if (shapes) {
      spy::detect::OverlapFrame gt{w, h, {}}, pr{w, h, {}};
      for (const auto& d : im.gts) gt.boxes.push_back(d.box);
      if (auto it = shapes->find(stem); it != shapes->end())
        for (const auto& d : spy::io::to_pixel_detections<spy::ShapeClass>(
                 spy::io::read_detections(it->second), w, h))
          pr.boxes.push_back(d.box);
      ov_gt[stem] = std::move(gt);
      ov_pred[stem] = std::move(pr);
    }
    images.push_back(std::move(im));
  }

  auto rep = spy::eval::evaluate(images, a.iou, g.effective_jobs());
  if (shapes) rep.sd_overlap = spy::eval::summarize(spy::detect::batch_sd_overlap(ov_gt, ov_pred));
  std::fputs(rep.to_table().c_str(), stdout);
  if (!a.report.empty()) {
    std::ofstream out(a.report, std::ios::trunc);
    if (!out) throw spy::IoError("cannot write " + a.report);
    out << rep.to_json().dump(2) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape-based spacecraft component detection toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline configuration (JSON)");
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Random seed");

  ShapegenArgs sg;
  auto* shapegen = app.add_subcommand("shapegen", "Generate a synthetic primitive-shape dataset");
  shapegen->add_option("--out", sg.out, "Output directory")->required();
  shapegen->add_option("--count", sg.count, "Number of frames")->check(CLI::NonNegativeNumber);
  shapegen->add_flag("--collage", sg.collage, "Several shapes per frame");
  shapegen->add_option("--frame-size", sg.frame_size, "Square frame size in pixels");
  shapegen->add_flag("--rotation", sg.rotation, "Random rotation augmentation");
  shapegen->add_flag("--shear", sg.shear, "Random shear augmentation");
  shapegen->add_flag("--blur", sg.blur, "Random Gaussian blur augmentation");
  shapegen->add_flag("--noise", sg.noise, "Random Gaussian noise augmentation");

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate-texture", "Build the texture LUT from annotated crops");
  calibrate->add_option("--images", ca.images, "Image directory")->required()->check(CLI::ExistingDirectory);
  calibrate->add_option("--labels", ca.labels, "Component label directory")->required()->check(CLI::ExistingDirectory);
  calibrate->add_option("--out", ca.out, "Output LUT (JSON)")->required();
  calibrate->add_option("--bin-rule", ca.bin_rule, "count or fd_width");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Detect and classify components in a directory of images");
  run->add_option("--images", ra.images, "Input image directory")->required()->check(CLI::ExistingDirectory);
  run->add_option("--out", ra.out, "Component detection output directory")->required();
  run->add_option("--shapes", ra.shapes, "Also write shape detections here");
  run->add_option("--overlay", ra.overlay, "Write annotated PNGs here");

  FuseArgs fa;
  auto* fuse = app.add_subcommand("fuse", "Fuse data-driven and SpY component detections");
  fuse->add_option("--yolo", fa.yolo, "Data-driven detection directory")->required()->check(CLI::ExistingDirectory);
  fuse->add_option("--spy", fa.spy, "SpY detection directory")->required()->check(CLI::ExistingDirectory);
  fuse->add_option("--out", fa.out, "Output directory")->required();
  add_sizer_options(fuse, fa.sizer, fa.images);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate component detections against labels");
  eval->add_option("--detections", ea.detections, "Detection directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--labels", ea.labels, "Label directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--shape-dets", ea.shape_dets, "Shape detections for SD_overlap")->check(CLI::ExistingDirectory);
  eval->add_option("--report", ea.report, "Write the JSON report here");
  eval->add_option("--iou", ea.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  add_sizer_options(eval, ea.sizer, ea.images);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*shapegen) return cmd_shapegen(g, sg);
    if (*calibrate) return cmd_calibrate(g, ca);
    if (*run) return cmd_run(g, ra);
    if (*fuse) return cmd_fuse(g, fa);
    if (*eval) return cmd_eval(g, ea);
  } catch (const spy::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
