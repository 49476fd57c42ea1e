#pragma once
// Color distribution descriptors: histogram (CH), moments (CM1/CM2),
// local histogram (LCH) and per-channel co-occurrence (CCM).

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "avivis/cooccurrence.hpp"

namespace avivis {

struct ColorFeatureParams {
  int ch_bins = 32;
  int lch_grid = 4;
  int lch_bins = 8;
  int ccm_levels = 8;
  std::vector<Offset> ccm_offsets = {{1, 0}, {0, 1}};

  void validate() const {
    if (ch_bins <= 0 || lch_grid <= 0 || lch_bins <= 0 || ccm_levels < 2 || ccm_offsets.empty()) {
      throw UsageError("invalid color feature parameters");
    }
  }
};

using PlaneTriple = std::array<const Plane*, 3>;

inline int hist_bin(double v, int bins) { return quantize(v, bins); }

namespace detail {

inline void check_same_dims(const PlaneTriple& planes) {
  for (const Plane* p : planes) {
    if (p->width != planes[0]->width || p->height != planes[0]->height) {
      throw DataError("planes differ in size");
    }
  }
}

// Normalized histogram of the pixels inside [x0,x1) x [y0,y1).
inline void append_histogram(const Plane& p, int bins, int x0, int x1, int y0, int y1,
                             std::vector<double>& out) {
  const std::size_t base = out.size();
  out.resize(base + static_cast<std::size_t>(bins), 0.0);
  std::size_t n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      out[base + static_cast<std::size_t>(hist_bin(p(x, y), bins))] += 1.0;
      ++n;
    }
  }
  if (n > 0) {
    for (std::size_t i = base; i < out.size(); ++i) out[i] /= static_cast<double>(n);
  }
}

}  // namespace detail

/// Per-channel histograms over [0,1], each summing to 1, concatenated.
inline std::vector<double> color_histogram(const PlaneTriple& planes, int bins) {
  detail::check_same_dims(planes);
  std::vector<double> out;
  out.reserve(3 * static_cast<std::size_t>(bins));
  for (const Plane* p : planes) detail::append_histogram(*p, bins, 0, p->width, 0, p->height, out);
  return out;
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;       // population
  double skewness = 0.0;  // 0 for zero variance
  double kurtosis = 0.0;  // excess; 0 for zero variance
};

inline Moments moments(std::span<const double> v) {
  Moments m;
  if (v.empty()) return m;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  m.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.std = std::sqrt(m2);
  if (m2 > 1e-20 * std::max(1.0, m.mean * m.mean)) {
    m.skewness = m3 / (m2 * m.std);
    m.kurtosis = m4 / (m2 * m2) - 3.0;
  } else {
    m.std = 0.0;
  }
  return m;
}

/// CM1: (mean, std) per channel. CM2 adds (skewness, excess kurtosis), with
/// the four statistics of a channel kept together.
inline std::vector<double> color_moments(std::array<std::span<const double>, 3> channels,
                                         bool higher_order) {
  std::vector<double> out;
  for (const auto& ch : channels) {
    const Moments m = moments(ch);
    out.push_back(m.mean);
    out.push_back(m.std);
    if (higher_order) {
      out.push_back(m.skewness);
      out.push_back(m.kurtosis);
    }
  }
  return out;
}

inline std::vector<double> color_moments(const PlaneTriple& planes, bool higher_order) {
  detail::check_same_dims(planes);
  return color_moments({std::span<const double>(planes[0]->data), std::span<const double>(planes[1]->data),
                        std::span<const double>(planes[2]->data)},
                       higher_order);
}

/// Cell boundaries along one axis: `grid` cells of size n/grid, the last cell
/// absorbing the remainder.
inline std::vector<int> grid_edges(int n, int grid) {
  std::vector<int> e(static_cast<std::size_t>(grid) + 1);
  const int step = n / grid;
  for (int i = 0; i < grid; ++i) e[static_cast<std::size_t>(i)] = i * step;
  e[static_cast<std::size_t>(grid)] = n;
  return e;
}

/// Cells in row-major order; within a cell, the three channel histograms.
inline std::vector<double> local_color_histogram(const PlaneTriple& planes, int grid, int bins) {
  detail::check_same_dims(planes);
  const auto ex = grid_edges(planes[0]->width, grid);
  const auto ey = grid_edges(planes[0]->height, grid);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid * grid * 3 * bins));
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      for (const Plane* p : planes) {
        detail::append_histogram(*p, bins, ex[gx], ex[gx + 1], ey[gy], ey[gy + 1], out);
      }
    }
  }
  return out;
}

/// For each channel and offset: contrast, correlation, energy, homogeneity, entropy.
inline std::vector<double> color_cooccurrence(const PlaneTriple& planes, int levels,
                                              const std::vector<Offset>& offsets) {
  detail::check_same_dims(planes);
  std::vector<double> out;
  for (const Plane* p : planes) append_haralick(*p, levels, offsets, out);
  return out;
}

}  // namespace avivis
