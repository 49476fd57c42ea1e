#pragma once
// Quantized co-occurrence matrices and Haralick statistics, shared by the
// per-channel color co-occurrence (CCM) and gray-level (GLCM) extractors.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "avivis/image.hpp"

namespace avivis {

struct FeatureVector {
  std::string group;
  std::vector<double> values;
};

struct Offset {
  int dx = 1;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

inline int quantize(double v, int levels) {
  const int q = static_cast<int>(std::floor(v * levels));
  return std::clamp(q, 0, levels - 1);
}

/// levels x levels joint distribution, row-major.
struct CooccurrenceMatrix {
  int levels = 0;
  std::vector<double> p;

  double operator()(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

/// Symmetric co-occurrence of the quantized plane at one offset, normalized
/// to sum 1. Pairs falling outside the plane are skipped; with no valid pair
/// the matrix is all zeros.
inline CooccurrenceMatrix cooccurrence(const Plane& plane, int levels, Offset off) {
  CooccurrenceMatrix m{levels, std::vector<double>(static_cast<std::size_t>(levels) * levels, 0.0)};
  std::vector<int> q(plane.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = quantize(plane.data[i], levels);
  double total = 0.0;
  for (int y = 0; y < plane.height; ++y) {
    const int y2 = y + off.dy;
    if (y2 < 0 || y2 >= plane.height) continue;
    for (int x = 0; x < plane.width; ++x) {
      const int x2 = x + off.dx;
      if (x2 < 0 || x2 >= plane.width) continue;
      const int a = q[static_cast<std::size_t>(y) * plane.width + x];
      const int b = q[static_cast<std::size_t>(y2) * plane.width + x2];
      m.p[static_cast<std::size_t>(a) * levels + b] += 1.0;
      m.p[static_cast<std::size_t>(b) * levels + a] += 1.0;
      total += 2.0;
    }
  }
  if (total > 0.0) {
    for (auto& v : m.p) v /= total;
  }
  return m;
}

struct HaralickStats {
  double contrast = 0.0;
  double correlation = 0.0;
  double energy = 0.0;  // angular second moment
  double homogeneity = 0.0;
  double entropy = 0.0;
};

/// Correlation is 1 when either marginal has zero variance.
inline HaralickStats haralick(const CooccurrenceMatrix& m) {
  HaralickStats s;
  const int n = m.levels;
  double sum = 0.0, mu_i = 0.0, mu_j = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = m(i, j);
      sum += p;
      mu_i += i * p;
      mu_j += j * p;
    }
  }
  if (sum <= 0.0) return s;
  double var_i = 0.0, var_j = 0.0, cov = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = m(i, j);
      if (p == 0.0) continue;
      const double d = i - j;
      s.contrast += d * d * p;
      s.energy += p * p;
      s.homogeneity += p / (1.0 + d * d);
      s.entropy -= p * std::log(p);
      var_i += (i - mu_i) * (i - mu_i) * p;
      var_j += (j - mu_j) * (j - mu_j) * p;
      cov += (i - mu_i) * (j - mu_j) * p;
    }
  }
  s.correlation = (var_i < 1e-15 || var_j < 1e-15) ? 1.0 : cov / std::sqrt(var_i * var_j);
  return s;
}

/// Appends contrast, correlation, energy, homogeneity, entropy for each offset.
inline void append_haralick(const Plane& plane, int levels, const std::vector<Offset>& offsets,
                            std::vector<double>& out) {
  for (const auto& off : offsets) {
    const HaralickStats s = haralick(cooccurrence(plane, levels, off));
    out.insert(out.end(), {s.contrast, s.correlation, s.energy, s.homogeneity, s.entropy});
  }
}

}  // namespace avivis
