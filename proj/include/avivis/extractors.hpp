#pragma once
// Feature groups are named "{SPACE}-{NAME}" (e.g. "LAB-CM", "HSV-LBP").
// This header resolves names to extractors and runs them on one image.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "avivis/colorspace.hpp"
#include "avivis/feat_color.hpp"
#include "avivis/feat_shape.hpp"
#include "avivis/feat_texture.hpp"

namespace avivis {

enum class ColorSpace { RGB = 0, HSV, LAB };

enum class Extractor { CH = 0, CM1, CM, LCH, CCM, GLCM, LBP, HOG, GF, FT, WT, SOBEL, PREWITT, CANNY, CONTOUR, HARRIS };

inline constexpr std::array<const char*, 3> kSpaceNames = {"RGB", "HSV", "LAB"};
inline constexpr std::array<const char*, 16> kExtractorNames = {
    "CH", "CM1", "CM", "LCH", "CCM", "GLCM", "LBP", "HOG", "GF", "FT", "WT", "SOBEL", "PREWITT", "CANNY", "CONTOUR", "HARRIS"};

enum class ExtractorFamily { Color, Texture, Shape };

inline ExtractorFamily family_of(Extractor e) {
  if (e <= Extractor::CCM) return ExtractorFamily::Color;
  if (e <= Extractor::WT) return ExtractorFamily::Texture;
  return ExtractorFamily::Shape;
}

struct GroupId {
  ColorSpace space = ColorSpace::RGB;
  Extractor extractor = Extractor::CH;

  std::string name() const {
    return std::string(kSpaceNames[static_cast<std::size_t>(space)]) + "-" +
           kExtractorNames[static_cast<std::size_t>(extractor)];
  }
  friend auto operator<=>(const GroupId&, const GroupId&) = default;
};

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline std::optional<ColorSpace> parse_space(const std::string& s) {
  const std::string u = upper(s);
  for (std::size_t i = 0; i < kSpaceNames.size(); ++i)
    if (u == kSpaceNames[i]) return static_cast<ColorSpace>(i);
  return std::nullopt;
}

inline std::optional<Extractor> parse_extractor(const std::string& s) {
  const std::string u = upper(s);
  if (u == "CM2") return Extractor::CM;
  for (std::size_t i = 0; i < kExtractorNames.size(); ++i)
    if (u == kExtractorNames[i]) return static_cast<Extractor>(i);
  return std::nullopt;
}

inline GroupId parse_group(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw UsageError("feature group must look like SPACE-NAME: " + s);
  const auto sp = parse_space(s.substr(0, dash));
  const auto ex = parse_extractor(s.substr(dash + 1));
  if (!sp || !ex) throw UsageError("unknown feature group: " + s);
  return {*sp, *ex};
}

/// Parses, de-duplicates and sorts groups by (space, extractor).
inline std::vector<GroupId> canonical_groups(const std::vector<std::string>& names) {
  if (names.empty()) throw UsageError("no feature groups configured");
  std::vector<GroupId> g;
  for (const auto& n : names) g.push_back(parse_group(n));
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

struct ExtractorParams {
  ColorFeatureParams color;
  TextureParams texture;
  ShapeParams shape;

  void validate() const {
    color.validate();
    texture.validate();
    shape.validate();
  }
};

// ---- JSON mapping for config files and cache headers.

inline void to_json(nlohmann::json& j, const Offset& o) { j = nlohmann::json::array({o.dx, o.dy}); }
inline void from_json(const nlohmann::json& j, Offset& o) {
  o.dx = j.at(0).get<int>();
  o.dy = j.at(1).get<int>();
}

inline void to_json(nlohmann::json& j, const ExtractorParams& p) {
  j = nlohmann::json{{"ch_bins", p.color.ch_bins},
                     {"lch_grid", p.color.lch_grid},
                     {"lch_bins", p.color.lch_bins},
                     {"ccm_levels", p.color.ccm_levels},
                     {"ccm_offsets", p.color.ccm_offsets},
                     {"lbp_points", p.texture.lbp_points},
                     {"lbp_radius", p.texture.lbp_radius},
                     {"glcm_levels", p.texture.glcm_levels},
                     {"glcm_offsets", p.texture.glcm_offsets},
                     {"hog_cell", p.texture.hog_cell},
                     {"hog_orients", p.texture.hog_orients},
                     {"hog_block", p.texture.hog_block},
                     {"gabor_freqs", p.texture.gabor_freqs},
                     {"gabor_orients", p.texture.gabor_orients},
                     {"fft_radial_bins", p.texture.fft_radial_bins},
                     {"wavelet_levels", p.texture.wavelet_levels},
                     {"canny_low", p.shape.canny_low},
                     {"canny_high", p.shape.canny_high},
                     {"canny_sigma", p.shape.canny_sigma},
                     {"shape_grid", p.shape.grid},
                     {"harris_k", p.shape.harris_k},
                     {"harris_thresh", p.shape.harris_thresh},
                     {"harris_sigma", p.shape.harris_sigma}};
}

inline void from_json(const nlohmann::json& j, ExtractorParams& p) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("ch_bins", p.color.ch_bins);
  get("lch_grid", p.color.lch_grid);
  get("lch_bins", p.color.lch_bins);
  get("ccm_levels", p.color.ccm_levels);
  get("ccm_offsets", p.color.ccm_offsets);
  get("lbp_points", p.texture.lbp_points);
  get("lbp_radius", p.texture.lbp_radius);
  get("glcm_levels", p.texture.glcm_levels);
  get("glcm_offsets", p.texture.glcm_offsets);
  get("hog_cell", p.texture.hog_cell);
  get("hog_orients", p.texture.hog_orients);
  get("hog_block", p.texture.hog_block);
  get("gabor_freqs", p.texture.gabor_freqs);
  get("gabor_orients", p.texture.gabor_orients);
  get("fft_radial_bins", p.texture.fft_radial_bins);
  get("wavelet_levels", p.texture.wavelet_levels);
  get("canny_low", p.shape.canny_low);
  get("canny_high", p.shape.canny_high);
  get("canny_sigma", p.shape.canny_sigma);
  get("shape_grid", p.shape.grid);
  get("harris_k", p.shape.harris_k);
  get("harris_thresh", p.shape.harris_thresh);
  get("harris_sigma", p.shape.harris_sigma);
}

inline std::uint64_t params_fingerprint(const ExtractorParams& p) {
  return fnv1a(nlohmann::json(p).dump());
}

/// Luminance-bearing plane of a space: Gray for RGB, V for HSV, L for LAB.
inline ChannelId luminance_channel(ColorSpace s) {
  switch (s) {
    case ColorSpace::RGB: return ChannelId::Gray;
    case ColorSpace::HSV: return ChannelId::V;
    default: return ChannelId::L;
  }
}

inline std::array<ChannelId, 3> space_channels(ColorSpace s) {
  switch (s) {
    case ColorSpace::RGB: return {ChannelId::R, ChannelId::G, ChannelId::B};
    case ColorSpace::HSV: return {ChannelId::H, ChannelId::S, ChannelId::V};
    default: return {ChannelId::L, ChannelId::A, ChannelId::Bstar};
  }
}

/// Output width of a group for a given image size.
inline std::size_t group_width(GroupId g, const ExtractorParams& p, int width, int height) {
  const auto& c = p.color;
  const auto& t = p.texture;
  switch (g.extractor) {
    case Extractor::CH: return 3 * static_cast<std::size_t>(c.ch_bins);
    case Extractor::CM1: return 6;
    case Extractor::CM: return 12;
    case Extractor::LCH: return static_cast<std::size_t>(c.lch_grid) * c.lch_grid * 3 * c.lch_bins;
    case Extractor::CCM: return 3 * 5 * c.ccm_offsets.size();
    case Extractor::GLCM: return 5 * t.glcm_offsets.size();
    case Extractor::LBP: return static_cast<std::size_t>(lbp_bin_count(t.lbp_points));
    case Extractor::HOG: return hog_length(width, height, t.hog_cell, t.hog_orients, t.hog_block);
    case Extractor::GF: return 2 * t.gabor_freqs.size() * static_cast<std::size_t>(t.gabor_orients);
    case Extractor::FT: return static_cast<std::size_t>(t.fft_radial_bins) + 3;
    case Extractor::WT: return 3 * (3 * static_cast<std::size_t>(t.wavelet_levels) + 1);
    case Extractor::SOBEL:
    case Extractor::PREWITT: return edge_stats_length(p.shape.grid);
    case Extractor::CANNY: return static_cast<std::size_t>(p.shape.grid) * p.shape.grid + 1;
    case Extractor::CONTOUR: return 5;
    case Extractor::HARRIS: return 4;
  }
  return 0;
}

/// Runs one extractor on a decomposed image.
inline std::vector<double> extract_group(GroupId g, const ChannelSet& cs, const ExtractorParams& p) {
  const auto chans = space_channels(g.space);
  const PlaneTriple triple = {&cs[chans[0]], &cs[chans[1]], &cs[chans[2]]};
  const Plane& lum = cs[luminance_channel(g.space)];
  const auto& c = p.color;
  const auto& t = p.texture;
  switch (g.extractor) {
    case Extractor::CH: return color_histogram(triple, c.ch_bins);
    case Extractor::CM1:
    case Extractor::CM: {
      const bool higher = g.extractor == Extractor::CM;
      if (g.space == ColorSpace::LAB) {
        return color_moments({std::span<const double>(cs.lab_raw.l), std::span<const double>(cs.lab_raw.a),
                              std::span<const double>(cs.lab_raw.b)},
                             higher);
      }
      return color_moments(triple, higher);
    }
    case Extractor::LCH:
      if (cs.width() < c.lch_grid || cs.height() < c.lch_grid) throw DataError("image smaller than LCH grid");
      return local_color_histogram(triple, c.lch_grid, c.lch_bins);
    case Extractor::CCM: return color_cooccurrence(triple, c.ccm_levels, c.ccm_offsets);
    case Extractor::GLCM: return glcm_features(lum, t.glcm_levels, t.glcm_offsets);
    case Extractor::LBP: return lbp_histogram(lum, t.lbp_points, t.lbp_radius);
    case Extractor::HOG: return hog_features(lum, t.hog_cell, t.hog_orients, t.hog_block);
    case Extractor::GF: return gabor_features(lum, t.gabor_freqs, t.gabor_orients);
    case Extractor::FT: return fft_features(lum, t.fft_radial_bins);
    case Extractor::WT: return wavelet_features(lum, t.wavelet_levels);
    case Extractor::SOBEL: return sobel_features(lum, p.shape.grid);
    case Extractor::PREWITT: return prewitt_features(lum, p.shape.grid);
    case Extractor::CANNY: return canny_features(lum, p.shape);
    case Extractor::CONTOUR: return contour_features(lum);
    case Extractor::HARRIS: return harris_features(lum, p.shape);
  }
  throw UsageError("unhandled extractor");
}

}  // namespace avivis
