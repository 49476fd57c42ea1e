#pragma once
// RGB -> HSV / CIELAB / luma conversion and the ten-channel decomposition.

#include <array>
#include <cmath>

#include "avivis/image.hpp"

namespace avivis {

struct Hsv {
  double h;  // angle / 360, in [0, 1)
  double s;
  double v;
};

/// Hexcone HSV of one 8-bit pixel. Hue of an achromatic pixel is 0.
inline Hsv hsv_from_rgb(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
  if (delta > 0.0) {
    double deg;
    if (mx == r) {
      deg = 60.0 * std::fmod((g - b) / delta + 6.0, 6.0);
    } else if (mx == g) {
      deg = 60.0 * ((b - r) / delta + 2.0);
    } else {
      deg = 60.0 * ((r - g) / delta + 4.0);
    }
    out.h = deg / 360.0;
    if (out.h >= 1.0) out.h -= 1.0;
  }
  return out;
}

/// Inverse hexcone, components in [0, 1].
inline std::array<double, 3> rgb_from_hsv(const Hsv& c) {
  const double h6 = c.h * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = c.v * (1.0 - c.s);
  const double q = c.v * (1.0 - c.s * f);
  const double t = c.v * (1.0 - c.s * (1.0 - f));
  switch (sector) {
    case 0: return {c.v, t, p};
    case 1: return {q, c.v, p};
    case 2: return {p, c.v, t};
    case 3: return {p, q, c.v};
    case 4: return {t, p, c.v};
    default: return {c.v, p, q};
  }
}

struct Lab {
  double l;  // [0, 100]
  double a;
  double b;
};

namespace detail {

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// sRGB primaries, D65. The white point is the image of (1,1,1) so that
// white maps to a* = b* = 0 exactly.
inline constexpr double kRgbToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                           {0.2126729, 0.7151522, 0.0721750},
                                           {0.0193339, 0.1191920, 0.9503041}};

}  // namespace detail

/// CIELAB (D65, 2 degree observer) of one 8-bit sRGB pixel.
inline Lab lab_from_rgb(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double lin[3] = {detail::srgb_to_linear(r8 / 255.0), detail::srgb_to_linear(g8 / 255.0),
                         detail::srgb_to_linear(b8 / 255.0)};
  double xyz[3];
  double white[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = detail::kRgbToXyz[i][0] * lin[0] + detail::kRgbToXyz[i][1] * lin[1] +
             detail::kRgbToXyz[i][2] * lin[2];
    white[i] = detail::kRgbToXyz[i][0] + detail::kRgbToXyz[i][1] + detail::kRgbToXyz[i][2];
  }
  const double fx = detail::lab_f(xyz[0] / white[0]);
  const double fy = detail::lab_f(xyz[1] / white[1]);
  const double fz = detail::lab_f(xyz[2] / white[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline double lab_l_to_unit(double l) { return std::clamp(l / 100.0, 0.0, 1.0); }
inline double lab_ab_to_unit(double v) { return (std::clamp(v, -128.0, 127.0) + 128.0) / 255.0; }

inline double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

inline std::array<Plane, 3> rgb_to_hsv(const RasterRGB& img) {
  std::array<Plane, 3> out{Plane(img.width, img.height, ChannelId::H),
                           Plane(img.width, img.height, ChannelId::S),
                           Plane(img.width, img.height, ChannelId::V)};
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.data[i * 3];
    const Hsv c = hsv_from_rgb(p[0], p[1], p[2]);
    out[0].data[i] = c.h;
    out[1].data[i] = c.s;
    out[2].data[i] = c.v;
  }
  return out;
}

/// Unnormalized L*, a*, b* values for every pixel (used by LAB moments).
struct LabRaw {
  std::vector<double> l, a, b;
};

inline LabRaw rgb_to_lab_raw(const RasterRGB& img) {
  LabRaw out;
  const std::size_t n = img.pixel_count();
  out.l.resize(n);
  out.a.resize(n);
  out.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = &img.data[i * 3];
    const Lab c = lab_from_rgb(p[0], p[1], p[2]);
    out.l[i] = c.l;
    out.a[i] = c.a;
    out.b[i] = c.b;
  }
  return out;
}

/// L stored as L/100; a*, b* clamped to [-128, 127] and mapped affinely to [0, 1].
inline std::array<Plane, 3> rgb_to_lab(const RasterRGB& img) {
  std::array<Plane, 3> out{Plane(img.width, img.height, ChannelId::L),
                           Plane(img.width, img.height, ChannelId::A),
                           Plane(img.width, img.height, ChannelId::Bstar)};
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.data[i * 3];
    const Lab c = lab_from_rgb(p[0], p[1], p[2]);
    out[0].data[i] = lab_l_to_unit(c.l);
    out[1].data[i] = lab_ab_to_unit(c.a);
    out[2].data[i] = lab_ab_to_unit(c.b);
  }
  return out;
}

inline Plane rgb_to_gray(const RasterRGB& img) {
  Plane out(img.width, img.height, ChannelId::Gray);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.data[i * 3];
    out.data[i] = luma(p[0], p[1], p[2]);
  }
  return out;
}

/// All ten planes, indexable by ChannelId, plus raw LAB values.
struct ChannelSet {
  std::array<Plane, kChannelCount> planes;
  LabRaw lab_raw;

  const Plane& operator[](ChannelId c) const { return planes[static_cast<std::size_t>(c)]; }
  int width() const { return planes[0].width; }
  int height() const { return planes[0].height; }
};

inline ChannelSet decompose_channels(const RasterRGB& img) {
  if (!img.valid()) throw DataError("invalid raster");
  ChannelSet cs;
  auto put = [&](Plane p) { cs.planes[static_cast<std::size_t>(p.channel)] = std::move(p); };
  put(rgb_to_gray(img));
  Plane r(img.width, img.height, ChannelId::R), g(img.width, img.height, ChannelId::G),
      b(img.width, img.height, ChannelId::B);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    r.data[i] = img.data[i * 3] / 255.0;
    g.data[i] = img.data[i * 3 + 1] / 255.0;
    b.data[i] = img.data[i * 3 + 2] / 255.0;
  }
  put(std::move(r));
  put(std::move(g));
  put(std::move(b));
  for (auto& p : rgb_to_hsv(img)) put(std::move(p));
  cs.lab_raw = rgb_to_lab_raw(img);
  const std::size_t n = img.pixel_count();
  Plane l(img.width, img.height, ChannelId::L), a(img.width, img.height, ChannelId::A),
      bs(img.width, img.height, ChannelId::Bstar);
  for (std::size_t i = 0; i < n; ++i) {
    l.data[i] = lab_l_to_unit(cs.lab_raw.l[i]);
    a.data[i] = lab_ab_to_unit(cs.lab_raw.a[i]);
    bs.data[i] = lab_ab_to_unit(cs.lab_raw.b[i]);
  }
  put(std::move(l));
  put(std::move(a));
  put(std::move(bs));
  return cs;
}

}  // namespace avivis
