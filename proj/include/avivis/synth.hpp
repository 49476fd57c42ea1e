#pragma once
// Procedural four-class image set. Classes differ in hue, stripe frequency
// and blob shape, so colour, texture and shape extractors each see signal.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "avivis/colorspace.hpp"
#include "avivis/image.hpp"

namespace avivis {

struct SynthClass {
  const char* name;
  double hue_deg;
  double stripe_period;  // pixels
  int shape;             // 0 disk, 1 square, 2 bar, 3 ring
};

inline const std::vector<SynthClass>& synth_classes() {
  static const std::vector<SynthClass> c = {
      {"cocci", 28.0, 4.0, 0}, {"healthy", 110.0, 16.0, 2}, {"ncd", 205.0, 8.0, 1}, {"salmo", 320.0, 28.0, 3}};
  return c;
}

/// One image of class `cls`; identical inputs give identical pixels.
inline RasterRGB synth_image(std::size_t cls, std::size_t index, int size, std::uint64_t seed) {
  const auto& spec = synth_classes().at(cls);
  Rng rng(derive_seed(derive_seed(seed, spec.name), index));
  const double hue = spec.hue_deg + rng.uniform(-12.0, 12.0);
  const double sat = rng.uniform(0.35, 0.6);
  const double val = rng.uniform(0.45, 0.65);
  const double theta = rng.uniform(0.0, 3.141592653589793);
  const double phase = rng.uniform(0.0, 6.283185307179586);
  const double period = spec.stripe_period * rng.uniform(0.9, 1.1);
  const double kx = std::cos(theta) * 6.283185307179586 / period, ky = std::sin(theta) * 6.283185307179586 / period;

  struct Blob {
    double cx, cy, r, angle;
  };
  std::vector<Blob> blobs(3 + rng.below(4));
  for (auto& b : blobs) {
    b.r = rng.uniform(0.06, 0.12) * size;
    b.cx = rng.uniform(b.r, size - b.r);
    b.cy = rng.uniform(b.r, size - b.r);
    b.angle = rng.uniform(0.0, 3.141592653589793);
  }
  auto inside = [&](const Blob& b, double x, double y) {
    const double dx = x - b.cx, dy = y - b.cy;
    const double u = dx * std::cos(b.angle) + dy * std::sin(b.angle);
    const double v = -dx * std::sin(b.angle) + dy * std::cos(b.angle);
    switch (spec.shape) {
      case 0: return u * u + v * v <= b.r * b.r;
      case 1: return std::abs(u) <= 0.85 * b.r && std::abs(v) <= 0.85 * b.r;
      case 2: return std::abs(u) <= 1.6 * b.r && std::abs(v) <= 0.35 * b.r;
      default: {
        const double d2 = u * u + v * v;
        return d2 <= b.r * b.r && d2 >= 0.45 * b.r * b.r;
      }
    }
  };

  RasterRGB img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double v = val + 0.12 * std::sin(kx * x + ky * y + phase) + 0.03 * rng.normal();
      double h = hue, s = sat;
      for (const auto& b : blobs) {
        if (inside(b, x, y)) {
          v *= 0.55;
          h += 18.0;
          s = std::min(1.0, s + 0.2);
          break;
        }
      }
      h = std::fmod(h + 360.0, 360.0) / 360.0;
      const auto rgb = rgb_from_hsv({h, std::clamp(s, 0.0, 1.0), std::clamp(v, 0.0, 1.0)});
      img.set(x, y, static_cast<std::uint8_t>(std::lround(rgb[0] * 255.0)),
              static_cast<std::uint8_t>(std::lround(rgb[1] * 255.0)),
              static_cast<std::uint8_t>(std::lround(rgb[2] * 255.0)));
    }
  }
  return img;
}

/// Writes out/<class>/<class>_NNNN.png for every class. Returns the number
/// of images written.
inline std::size_t write_synth_dataset(const std::filesystem::path& out, std::size_t per_class, std::uint64_t seed,
                                       int size = 128, std::size_t jobs = 1) {
  if (per_class == 0) throw UsageError("images per class must be positive");
  if (size < 16) throw UsageError("synthetic images must be at least 16 pixels wide");
  const auto& classes = synth_classes();
  for (const auto& c : classes) std::filesystem::create_directories(out / c.name);
  parallel_for(classes.size() * per_class, jobs, [&](std::size_t k) {
    const std::size_t cls = k / per_class, i = k % per_class;
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04zu.png", classes[cls].name, i);
    write_png(out / classes[cls].name / name, synth_image(cls, i, size, seed));
  });
  return classes.size() * per_class;
}

}  // namespace avivis
