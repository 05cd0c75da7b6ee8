// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-box feature scorers feeding the rule-based classifier:
//   shape   - fixed table keyed by the detected primitive
//   color   - HSV range segmentation of the crop
//   texture - variance / entropy looked up in calibrated class histograms

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "spy/core.hpp"
#include "spy/error.hpp"
#include "spy/image.hpp"

namespace spy::scoring {

// ===========================================================================
// Shape

// Rows: Circle, Rectangle, Triangle, Ring.
// Columns: Antenna, Body, Solar, Thruster, WhiteRadiator, Unknown.
// WhiteRadiator has no table column and scores 1 for every shape.
inline constexpr std::array<std::array<double, 6>, 4> kShapeScoreTable = {{
    {2, 1, 1, 1, 1, 1},
    {1, 2, 2, 1, 1, 1},
    {1, 1, 1, 2, 1, 1},
    {2, 1, 2, 2, 1, 1},
}};

inline ClassScoreVector shape_score(ShapeClass shape) {
  return ClassScoreVector(kShapeScoreTable[static_cast<std::size_t>(shape)]);
}

// ===========================================================================
// Color

enum class NamedColor { Blue = 0, White, Silver, Gray1, Gray2, Black };

// Precedence order for pixels that fall in more than one range.
inline constexpr std::array<NamedColor, 6> kNamedColors = {
    NamedColor::Blue,  NamedColor::White, NamedColor::Silver,
    NamedColor::Gray1, NamedColor::Gray2, NamedColor::Black};

inline constexpr std::string_view to_string(NamedColor c) {
  switch (c) {
    case NamedColor::Blue: return "blue";
    case NamedColor::White: return "white";
    case NamedColor::Silver: return "silver";
    case NamedColor::Gray1: return "gray1";
    case NamedColor::Gray2: return "gray2";
    case NamedColor::Black: return "black";
  }
  return "?";
}

// Inclusive 8-bit HSV box. A hue range with min > max wraps through 0.
struct HsvRange {
  std::array<int, 3> min{0, 0, 0};
  std::array<int, 3> max{255, 255, 255};

  bool contains(std::uint8_t h, std::uint8_t s, std::uint8_t v) const {
    const bool hue_ok = min[0] <= max[0] ? (h >= min[0] && h <= max[0])
                                         : (h >= min[0] || h <= max[0]);
    return hue_ok && s >= min[1] && s <= max[1] && v >= min[2] && v <= max[2];
  }
};

struct ColorRangeConfig {
  std::array<HsvRange, 6> ranges;

  HsvRange& operator[](NamedColor c) { return ranges[static_cast<std::size_t>(c)]; }
  const HsvRange& operator[](NamedColor c) const {
    return ranges[static_cast<std::size_t>(c)];
  }

  // Stand-in ranges tuned on synthetic fixtures (H on the 0-255 scale).
  static ColorRangeConfig defaults() {
    ColorRangeConfig c;
    c[NamedColor::Blue] = {{140, 80, 40}, {180, 255, 255}};
    c[NamedColor::White] = {{0, 0, 200}, {255, 30, 255}};
    c[NamedColor::Silver] = {{0, 0, 140}, {255, 30, 200}};
    c[NamedColor::Gray1] = {{0, 0, 90}, {255, 40, 140}};
    c[NamedColor::Gray2] = {{0, 0, 50}, {255, 40, 90}};
    c[NamedColor::Black] = {{0, 0, 0}, {255, 255, 49}};
    return c;
  }

  void validate() const {
    for (auto c : kNamedColors) {
      const auto& r = (*this)[c];
      for (int k = 0; k < 3; ++k)
        if (r.min[k] < 0 || r.min[k] > 255 || r.max[k] < 0 || r.max[k] > 255)
          throw ConfigError("colors." + std::string(to_string(c)) +
                            ": bounds must be in [0, 255]");
      if (r.min[1] > r.max[1] || r.min[2] > r.max[2])
        throw ConfigError("colors." + std::string(to_string(c)) +
                          ": saturation/value min exceeds max");
    }
  }
};

struct ColorPercentages {
  std::array<double, 6> p{};  // kNamedColors order
  double unmatched = 0.0;

  double operator[](NamedColor c) const { return p[static_cast<std::size_t>(c)]; }

  // Largest fraction, ties broken by precedence order; nullopt when no pixel
  // matched any range.
  std::optional<NamedColor> dominant() const {
    std::optional<NamedColor> best;
    double best_v = 0.0;
    for (auto c : kNamedColors)
      if ((*this)[c] > best_v) {
        best_v = (*this)[c];
        best = c;
      }
    return best;
  }
};

inline ColorPercentages color_percentages(const ImageBuffer& hsv_crop,
                                          const ColorRangeConfig& ranges) {
  if (hsv_crop.color_space() != ColorSpace::HSV)
    throw Error("color_percentages expects an HSV crop");
  if (hsv_crop.pixel_count() == 0) throw Error("color_percentages: empty crop");
  std::array<std::size_t, 6> counts{};
  std::size_t unmatched = 0;
  const auto& d = hsv_crop.data();
  for (std::size_t i = 0, n = hsv_crop.pixel_count(); i < n; ++i) {
    const auto h = d[3 * i], s = d[3 * i + 1], v = d[3 * i + 2];
    bool hit = false;
    for (auto c : kNamedColors) {
      if (ranges[c].contains(h, s, v)) {
        ++counts[static_cast<std::size_t>(c)];
        hit = true;
        break;
      }
    }
    if (!hit) ++unmatched;
  }
  ColorPercentages out;
  const double n = static_cast<double>(hsv_crop.pixel_count());
  for (std::size_t k = 0; k < 6; ++k) out.p[k] = counts[k] / n;
  out.unmatched = unmatched / n;
  return out;
}

// Mean percentage of the colors tied to each class. Thruster uses silver and
// gray2. With `radiator_merge`, a white-dominated crop (p_white > 0.5) folds
// the white-radiator score into solar.
inline ClassScoreVector color_score(const ColorPercentages& p, bool radiator_merge) {
  using C = ComponentClass;
  using N = NamedColor;
  ClassScoreVector c;
  c[C::Antenna] = (p[N::Silver] + p[N::Gray1]) / 2.0;
  c[C::Body] = (p[N::Silver] + p[N::Gray1] + p[N::Gray2]) / 3.0;
  c[C::Solar] = p[N::Blue];
  c[C::Thruster] = (p[N::Silver] + p[N::Gray2]) / 2.0;
  c[C::WhiteRadiator] = p[N::White];
  c[C::Unknown] = p[N::Black];
  if (radiator_merge && p[N::White] > 0.5) {
    c[C::Solar] += c[C::WhiteRadiator];
    c[C::WhiteRadiator] = 0.0;
  }
  return c;
}

// ===========================================================================
// Texture

enum class TextureMetric { Variance = 0, Entropy = 1 };

inline constexpr std::string_view to_string(TextureMetric m) {
  return m == TextureMetric::Variance ? "variance" : "entropy";
}

inline constexpr double kVarianceDomainMax = 10000.0;
inline constexpr double kEntropyDomainMax = 8000.0;

inline constexpr double domain_max(TextureMetric m) {
  return m == TextureMetric::Variance ? kVarianceDomainMax : kEntropyDomainMax;
}

namespace detail {

inline std::array<std::uint64_t, 256> histogram256(const ImageBuffer& gray) {
  if (gray.color_space() != ColorSpace::Grayscale)
    throw Error("texture metrics expect a grayscale crop");
  if (gray.pixel_count() == 0) throw Error("texture metrics: empty crop");
  std::array<std::uint64_t, 256> h{};
  for (auto v : gray.data()) ++h[v];
  return h;
}

}  // namespace detail

struct VarianceValue {
  double raw = 0.0;
  double clamped = 0.0;  // limited to the variance LUT domain
};

// Population variance of the 8-bit intensities.
inline VarianceValue variance(const ImageBuffer& gray) {
  const auto h = detail::histogram256(gray);
  // Exact integer moments: var = (n*sum(x^2) - sum(x)^2) / n^2.
  unsigned __int128 n = 0, s1 = 0, s2 = 0;
  for (unsigned v = 0; v < 256; ++v) {
    n += h[v];
    s1 += static_cast<unsigned __int128>(h[v]) * v;
    s2 += static_cast<unsigned __int128>(h[v]) * v * v;
  }
  const unsigned __int128 num = n * s2 - s1 * s1;
  const double raw = static_cast<double>(num) / (static_cast<double>(n) * static_cast<double>(n));
  return {raw, std::clamp(raw, 0.0, kVarianceDomainMax)};
}

// Shannon entropy of the 256-bin intensity histogram in bits, times 1000.
inline double entropy(const ImageBuffer& gray) {
  const auto h = detail::histogram256(gray);
  const double n = static_cast<double>(gray.pixel_count());
  double e = 0.0;
  for (auto c : h) {
    if (c == 0) continue;
    const double q = c / n;
    e -= q * std::log2(q);
  }
  return std::clamp(1000.0 * e, 0.0, kEntropyDomainMax);
}

// How the per-class bin count is derived from the class sample.
//   CountAsWritten:  bins = round(2*IQR / cbrt(n))
//   WidthFD:         width = 2*IQR / cbrt(n), bins = ceil(domain / width)
// Both are floored at 1 and capped at kMaxBins.
enum class BinRule { CountAsWritten, WidthFD };

inline constexpr int kMaxBins = 10000;

inline std::string_view to_string(BinRule r) {
  return r == BinRule::CountAsWritten ? "count" : "fd_width";
}

inline BinRule bin_rule_from_string(std::string_view s) {
  if (s == "count") return BinRule::CountAsWritten;
  if (s == "fd_width") return BinRule::WidthFD;
  throw ConfigError("unknown bin rule '" + std::string(s) +
                    "' (expected count or fd_width)");
}

// Interquartile range with linear interpolation between order statistics.
inline double interquartile_range(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto q = [&](double p) {
    const double pos = p * (values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
  };
  return q(0.75) - q(0.25);
}

inline int bin_count(double iqr, std::size_t n, double domain, BinRule rule) {
  if (n == 0) return 1;
  const double cbrt_n = std::cbrt(static_cast<double>(n));
  if (rule == BinRule::CountAsWritten) {
    const double bins = std::round(2.0 * iqr / cbrt_n);
    return static_cast<int>(std::clamp(bins, 1.0, static_cast<double>(kMaxBins)));
  }
  const double width = 2.0 * iqr / cbrt_n;
  if (!(width > 0.0)) return kMaxBins;
  return static_cast<int>(
      std::clamp(std::ceil(domain / width), 1.0, static_cast<double>(kMaxBins)));
}

// Uniform histogram over [0, domain_max] holding raw sample counts.
struct TextureHistogram {
  double domain = kVarianceDomainMax;
  std::vector<double> frequencies = std::vector<double>(1, 0.0);
  std::size_t object_count = 0;

  int bins() const { return static_cast<int>(frequencies.size()); }

  int bin_index(double value) const {
    const double v = std::clamp(value, 0.0, domain);
    const int i = static_cast<int>(std::floor(v / domain * bins()));
    return std::clamp(i, 0, bins() - 1);
  }

  double frequency_at(double value) const { return frequencies[bin_index(value)]; }
};

struct TextureSample {
  ComponentClass cls;
  double variance;  // clamped to the variance domain
  double entropy;
};

inline std::size_t texture_index(ComponentClass c) {
  switch (c) {
    case ComponentClass::Antenna: return 0;
    case ComponentClass::Body: return 1;
    case ComponentClass::Solar: return 2;
    case ComponentClass::Thruster: return 3;
    default: throw Error("class " + std::string(to_string(c)) + " has no texture histogram");
  }
}

// Per-class counts in the mock-up data the default tables were built from.
inline constexpr std::array<std::size_t, 4> kReferenceObjectCounts = {741, 966, 1692, 320};

class TextureLUT {
 public:
  static constexpr std::string_view kFormat = "spy-texture-lut/1";

  TextureLUT() {
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t k = 0; k < 4; ++k) {
        tables_[m][k].domain = domain_max(static_cast<TextureMetric>(m));
        tables_[m][k].object_count = kReferenceObjectCounts[k];
      }
  }

  const TextureHistogram& table(TextureMetric m, ComponentClass c) const {
    return tables_[static_cast<std::size_t>(m)][texture_index(c)];
  }
  TextureHistogram& table(TextureMetric m, ComponentClass c) {
    return tables_[static_cast<std::size_t>(m)][texture_index(c)];
  }

  std::size_t object_count(ComponentClass c) const {
    return table(TextureMetric::Variance, c).object_count;
  }

  BinRule bin_rule() const { return rule_; }
  void set_bin_rule(BinRule r) { rule_ = r; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = std::string(kFormat);
    j["bin_rule"] = std::string(to_string(rule_));
    for (auto m : {TextureMetric::Variance, TextureMetric::Entropy}) {
      nlohmann::json mj;
      mj["domain"] = {0.0, domain_max(m)};
      for (auto c : kTextureClasses) {
        const auto& t = table(m, c);
        mj["classes"][std::string(to_string(c))] = {
            {"bin_count", t.bins()},
            {"frequencies", t.frequencies},
            {"object_count", t.object_count}};
      }
      j["metrics"][std::string(to_string(m))] = mj;
    }
    return j;
  }

  static TextureLUT from_json(const nlohmann::json& j) {
    try {
      if (j.at("format").get<std::string>() != kFormat)
        throw ConfigError("texture LUT: unsupported format tag '" +
                          j.at("format").get<std::string>() + "'");
      TextureLUT lut;
      lut.rule_ = bin_rule_from_string(j.at("bin_rule").get<std::string>());
      for (auto m : {TextureMetric::Variance, TextureMetric::Entropy}) {
        const auto& mj = j.at("metrics").at(std::string(to_string(m)));
        const auto dom = mj.at("domain").get<std::vector<double>>();
        if (dom.size() != 2 || dom[0] != 0.0 || dom[1] != domain_max(m))
          throw ConfigError("texture LUT: " + std::string(to_string(m)) +
                            " domain must be [0, " +
                            std::to_string(static_cast<int>(domain_max(m))) + "]");
        for (auto c : kTextureClasses) {
          const auto& cj = mj.at("classes").at(std::string(to_string(c)));
          auto& t = lut.table(m, c);
          t.domain = domain_max(m);
          t.frequencies = cj.at("frequencies").get<std::vector<double>>();
          t.object_count = cj.at("object_count").get<std::size_t>();
          if (t.frequencies.empty() ||
              static_cast<int>(t.frequencies.size()) != cj.at("bin_count").get<int>())
            throw ConfigError("texture LUT: " + std::string(to_string(m)) + "/" +
                              std::string(to_string(c)) +
                              ": bin_count does not match frequencies");
          for (double f : t.frequencies)
            if (!(f >= 0.0)) throw ConfigError("texture LUT: negative frequency");
        }
        // Object counts are per class, shared by both metrics.
      }
      for (auto c : kTextureClasses)
        if (lut.table(TextureMetric::Variance, c).object_count !=
            lut.table(TextureMetric::Entropy, c).object_count)
          throw ConfigError("texture LUT: object_count differs between metrics for " +
                            std::string(to_string(c)));
      return lut;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("texture LUT: ") + e.what());
    }
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
  }

  static TextureLUT load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open texture LUT: " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("texture LUT " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  std::array<std::array<TextureHistogram, 4>, 2> tables_;
  BinRule rule_ = BinRule::CountAsWritten;
};

inline TextureLUT calibrate_texture_lut(std::span<const TextureSample> samples,
                                        BinRule rule = BinRule::CountAsWritten) {
  std::array<std::array<std::vector<double>, 4>, 2> values;
  for (const auto& s : samples) {
    if (s.cls == ComponentClass::WhiteRadiator || s.cls == ComponentClass::Unknown)
      continue;
    const std::size_t k = texture_index(s.cls);
    values[0][k].push_back(std::clamp(s.variance, 0.0, kVarianceDomainMax));
    values[1][k].push_back(std::clamp(s.entropy, 0.0, kEntropyDomainMax));
  }
  for (auto c : kTextureClasses)
    if (values[0][texture_index(c)].empty())
      throw CalibrationError("no calibration samples for class '" +
                             std::string(to_string(c)) + "'");

  TextureLUT lut;
  lut.set_bin_rule(rule);
  for (auto m : {TextureMetric::Variance, TextureMetric::Entropy}) {
    const auto mi = static_cast<std::size_t>(m);
    for (auto c : kTextureClasses) {
      const auto& v = values[mi][texture_index(c)];
      auto& t = lut.table(m, c);
      t.domain = domain_max(m);
      t.object_count = v.size();
      t.frequencies.assign(
          bin_count(interquartile_range(v), v.size(), domain_max(m), rule), 0.0);
      for (double x : v) t.frequencies[t.bin_index(x)] += 1.0;
    }
  }
  return lut;
}

// Texture metrics of a grayscale crop as a calibration sample.
inline TextureSample texture_sample(const ImageBuffer& gray, ComponentClass cls) {
  return {cls, variance(gray).clamped, entropy(gray)};
}

// Share of each texture class among the bin frequencies at `value`, in
// kTextureClasses order. When every class has zero frequency the result is
// uniform and flagged degenerate.
struct RelativeFrequency {
  std::array<double, 4> r{};
  bool degenerate = false;
};

inline RelativeFrequency texture_relative_frequency(const TextureLUT& lut,
                                                    double value,
                                                    TextureMetric metric) {
  const double v = std::clamp(value, 0.0, domain_max(metric));
  std::array<double, 4> f{};
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    f[k] = lut.table(metric, kTextureClasses[k]).frequency_at(v);
    total += f[k];
  }
  RelativeFrequency out;
  if (total <= 0.0) {
    out.r.fill(0.25);
    out.degenerate = true;
    return out;
  }
  for (std::size_t k = 0; k < 4; ++k) out.r[k] = f[k] / total;
  return out;
}

// Rebalanced texture class scores: r_class * n_solar / n_class. A degenerate
// lookup carries no texture evidence and scores zero for every class.
inline ClassScoreVector texture_score(const RelativeFrequency& rel,
                                      const TextureLUT& lut) {
  ClassScoreVector out;
  if (rel.degenerate) return out;
  const double solar = static_cast<double>(lut.object_count(ComponentClass::Solar));
  for (std::size_t k = 0; k < 4; ++k) {
    const auto c = kTextureClasses[k];
    const auto n = lut.object_count(c);
    out[c] = n == 0 ? 0.0 : solar * rel.r[k] / static_cast<double>(n);
  }
  return out;
}

struct TextureScores {
  VarianceValue variance;
  double entropy = 0.0;
  RelativeFrequency variance_rel;
  RelativeFrequency entropy_rel;
  ClassScoreVector v;  // variance class scores
  ClassScoreVector e;  // entropy class scores
};

inline TextureScores texture_scores(const ImageBuffer& gray, const TextureLUT& lut) {
  TextureScores t;
  t.variance = variance(gray);
  t.entropy = entropy(gray);
  t.variance_rel = texture_relative_frequency(lut, t.variance.clamped, TextureMetric::Variance);
  t.entropy_rel = texture_relative_frequency(lut, t.entropy, TextureMetric::Entropy);
  t.v = texture_score(t.variance_rel, lut);
  t.e = texture_score(t.entropy_rel, lut);
  return t;
}

}  // namespace spy::scoring
