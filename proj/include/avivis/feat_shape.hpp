#pragma once
// Shape and structure summaries: Sobel/Prewitt gradient statistics, Canny
// edge densities, Otsu contour statistics and Harris corner statistics.
// Every extractor reduces its map to a short vector rather than emitting the
// map itself.

#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include "avivis/feat_color.hpp"

namespace avivis {

struct ShapeParams {
  double canny_low = 0.1;   // fraction of max gradient magnitude
  double canny_high = 0.3;  // fraction of max gradient magnitude
  double canny_sigma = 1.4;
  int grid = 4;
  double harris_k = 0.04;
  double harris_thresh = 0.01;  // fraction of max response
  double harris_sigma = 1.0;

  void validate() const {
    if (!(canny_low < canny_high) || canny_low < 0 || canny_high > 1 || grid <= 0 ||
        !(harris_k > 0 && harris_k < 0.25) || harris_thresh < 0 || canny_sigma <= 0 || harris_sigma <= 0) {
      throw UsageError("invalid shape parameters");
    }
  }
};

enum class EdgeKernel { Sobel, Prewitt };

/// 3x3 derivative responses with replicated borders. Sobel weights rows
/// 1-2-1, Prewitt 1-1-1.
inline void kernel_gradients(const Plane& p, EdgeKernel kind, std::vector<double>& gx, std::vector<double>& gy) {
  const double side = 1.0, mid = kind == EdgeKernel::Sobel ? 2.0 : 1.0;
  gx.assign(p.size(), 0.0);
  gy.assign(p.size(), 0.0);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const double dx_top = p.clamped(x + 1, y - 1) - p.clamped(x - 1, y - 1);
      const double dx_mid = p.clamped(x + 1, y) - p.clamped(x - 1, y);
      const double dx_bot = p.clamped(x + 1, y + 1) - p.clamped(x - 1, y + 1);
      const double dy_left = p.clamped(x - 1, y + 1) - p.clamped(x - 1, y - 1);
      const double dy_mid = p.clamped(x, y + 1) - p.clamped(x, y - 1);
      const double dy_right = p.clamped(x + 1, y + 1) - p.clamped(x + 1, y - 1);
      const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
      gx[i] = side * dx_top + mid * dx_mid + side * dx_bot;
      gy[i] = side * dy_left + mid * dy_mid + side * dy_right;
    }
  }
}

inline std::vector<double> gradient_magnitude(const Plane& p, EdgeKernel kind) {
  std::vector<double> gx, gy;
  kernel_gradients(p, kind, gx, gy);
  std::vector<double> mag(p.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]);
  return mag;
}

inline constexpr int kEdgeHistBins = 16;

inline std::size_t edge_stats_length(int grid) {
  return 2 * static_cast<std::size_t>(grid) * grid + 2 + kEdgeHistBins;
}

/// Per grid cell (mean, std) of gradient magnitude, then the global mean,
/// std and a 16-bin histogram over [0, max attainable magnitude].
inline std::vector<double> edge_features(const Plane& plane, EdgeKernel kind, int grid) {
  if (plane.width < grid || plane.height < grid) throw DataError("plane smaller than edge grid");
  const auto mag = gradient_magnitude(plane, kind);
  const double max_mag = (kind == EdgeKernel::Sobel ? 4.0 : 3.0) * std::numbers::sqrt2;
  const auto ex = grid_edges(plane.width, grid), ey = grid_edges(plane.height, grid);
  std::vector<double> out;
  out.reserve(edge_stats_length(grid));
  auto stats = [&](int x0, int x1, int y0, int y1) {
    double sum = 0.0, n = 0.0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) sum += mag[static_cast<std::size_t>(y) * plane.width + x], n += 1.0;
    const double mean = sum / n;
    double ss = 0.0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double d = mag[static_cast<std::size_t>(y) * plane.width + x] - mean;
        ss += d * d;
      }
    out.push_back(mean);
    out.push_back(std::sqrt(ss / n));
  };
  for (int gy = 0; gy < grid; ++gy)
    for (int gx = 0; gx < grid; ++gx) stats(ex[gx], ex[gx + 1], ey[gy], ey[gy + 1]);
  stats(0, plane.width, 0, plane.height);
  std::vector<double> hist(kEdgeHistBins, 0.0);
  for (double m : mag) hist[static_cast<std::size_t>(quantize(m / max_mag, kEdgeHistBins))] += 1.0;
  for (double h : hist) out.push_back(h / static_cast<double>(mag.size()));
  return out;
}

inline std::vector<double> sobel_features(const Plane& plane, int grid) {
  return edge_features(plane, EdgeKernel::Sobel, grid);
}
inline std::vector<double> prewitt_features(const Plane& plane, int grid) {
  return edge_features(plane, EdgeKernel::Prewitt, grid);
}

// ---------------------------------------------------------------- Gaussian

inline std::vector<double> gaussian_taps(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * static_cast<std::size_t>(r) + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable Gaussian blur of a row-major field, symmetric reflection at borders.
inline std::vector<double> gaussian_blur(const std::vector<double>& src, int width, int height, double sigma) {
  const auto k = gaussian_taps(sigma);
  const int r = static_cast<int>(k.size() / 2);
  auto refl = [](int i, int n) {
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
  };
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * src[static_cast<std::size_t>(y) * width + refl(x + i, width)];
      tmp[static_cast<std::size_t>(y) * width + x] = s;
    }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(refl(y + i, height)) * width + x];
      out[static_cast<std::size_t>(y) * width + x] = s;
    }
  return out;
}

// ---------------------------------------------------------------- Canny

/// Binary edge map (1 = edge). Gaussian smoothing, Sobel gradients,
/// non-maximum suppression along the quantized gradient direction, and
/// hysteresis with 8-connectivity. Suppression keeps a pixel that is strictly
/// above its backward neighbour and at least its forward neighbour, so a
/// symmetric ridge yields a one-pixel line. The outer one-pixel frame is
/// never an edge.
inline std::vector<std::uint8_t> canny_edges(const Plane& plane, const ShapeParams& params) {
  const int w = plane.width, h = plane.height;
  Plane smooth(w, h, plane.channel);
  smooth.data = gaussian_blur(plane.data, w, h, params.canny_sigma);
  std::vector<double> gx, gy;
  kernel_gradients(smooth, EdgeKernel::Sobel, gx, gy);
  std::vector<double> mag(smooth.size());
  double max_mag = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::hypot(gx[i], gy[i]);
    max_mag = std::max(max_mag, mag[i]);
  }
  std::vector<std::uint8_t> edges(mag.size(), 0);
  if (max_mag <= 1e-12) return edges;

  std::vector<double> nms(mag.size(), 0.0);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double m = mag[i];
      if (m <= 0.0) continue;
      double ang = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
      if (ang < 0) ang += 180.0;
      int bx, by;  // backward neighbour offset; forward is the negation
      if (ang < 22.5 || ang >= 157.5) {
        bx = -1, by = 0;
      } else if (ang < 67.5) {
        bx = -1, by = -1;
      } else if (ang < 112.5) {
        bx = 0, by = -1;
      } else {
        bx = 1, by = -1;
      }
      const double back = mag[static_cast<std::size_t>(y + by) * w + (x + bx)];
      const double fwd = mag[static_cast<std::size_t>(y - by) * w + (x - bx)];
      if (m > back && m >= fwd) nms[i] = m;
    }
  }
  const double hi = params.canny_high * max_mag, lo = params.canny_low * max_mag;
  std::queue<std::size_t> frontier;
  for (std::size_t i = 0; i < nms.size(); ++i) {
    if (nms[i] >= hi && nms[i] > 0.0) {
      edges[i] = 1;
      frontier.push(i);
    }
  }
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (!edges[j] && nms[j] >= lo && nms[j] > 0.0) {
          edges[j] = 1;
          frontier.push(j);
        }
      }
  }
  return edges;
}

/// Edge density per grid cell, then the global density.
inline std::vector<double> canny_features(const Plane& plane, const ShapeParams& params) {
  const int grid = params.grid;
  if (plane.width < grid || plane.height < grid) throw DataError("plane smaller than edge grid");
  const auto edges = canny_edges(plane, params);
  const auto ex = grid_edges(plane.width, grid), ey = grid_edges(plane.height, grid);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid) * grid + 1);
  for (int gy = 0; gy < grid; ++gy)
    for (int gx = 0; gx < grid; ++gx) {
      double n = 0.0, e = 0.0;
      for (int y = ey[gy]; y < ey[gy + 1]; ++y)
        for (int x = ex[gx]; x < ex[gx + 1]; ++x) {
          e += edges[static_cast<std::size_t>(y) * plane.width + x];
          n += 1.0;
        }
      out.push_back(e / n);
    }
  double total = 0.0;
  for (auto e : edges) total += e;
  out.push_back(total / static_cast<double>(edges.size()));
  return out;
}

// ---------------------------------------------------------------- Contours

/// Otsu threshold over a 256-bin histogram of [0,1]; returns the last bin of
/// the background class, or -1 when the plane is single-valued (then nothing
/// is foreground). Ties resolve to the lowest bin.
inline int otsu_bin(const Plane& plane) {
  std::array<double, 256> hist{};
  for (double v : plane.data) hist[static_cast<std::size_t>(quantize(v, 256))] += 1.0;
  const double total = static_cast<double>(plane.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_bin = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[static_cast<std::size_t>(t)];
    sum0 += t * hist[static_cast<std::size_t>(t)];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = t;
    }
  }
  return best_bin;
}

/// 8-connected component labels (0 = background, 1..n in raster order of
/// first pixel).
inline std::vector<int> label_components(const std::vector<std::uint8_t>& mask, int w, int h, int& count) {
  std::vector<int> labels(mask.size(), 0);
  count = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || labels[start]) continue;
    labels[start] = ++count;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (mask[j] && !labels[j]) {
            labels[j] = count;
            stack.push_back(j);
          }
        }
    }
  }
  return labels;
}

struct TracedContour {
  std::vector<std::array<int, 2>> points;  // closed implicitly
  double perimeter = 0.0;                  // chain length, diagonal steps sqrt(2)
  double polygon_area = 0.0;               // shoelace over pixel centres
};

/// Moore-neighbour boundary trace of the component containing `start`, which
/// must be its first pixel in raster order. Stops when the trace re-enters
/// the start pixel heading to the same second pixel (Jacob's criterion).
inline TracedContour trace_boundary(const std::vector<int>& labels, int w, int h, std::size_t start) {
  static constexpr std::array<std::array<int, 2>, 8> dirs = {
      {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};  // clockwise, y down
  const int label = labels[start];
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && labels[static_cast<std::size_t>(y) * w + x] == label;
  };
  auto dir_of = [&](int dx, int dy) {
    for (int d = 0; d < 8; ++d)
      if (dirs[static_cast<std::size_t>(d)][0] == dx && dirs[static_cast<std::size_t>(d)][1] == dy) return d;
    return 4;
  };
  TracedContour c;
  const std::array<int, 2> s = {static_cast<int>(start % w), static_cast<int>(start / w)};
  c.points.push_back(s);
  std::array<int, 2> b = s;
  int back = 4;  // west of the first pixel is background
  std::array<int, 2> second{-1, -1};
  const std::size_t limit = 4 * static_cast<std::size_t>(w) * h + 8;
  for (std::size_t step = 0; step < limit; ++step) {
    int found = -1;
    for (int i = 1; i <= 8; ++i) {
      const int d = (back + i) % 8;
      if (inside(b[0] + dirs[static_cast<std::size_t>(d)][0], b[1] + dirs[static_cast<std::size_t>(d)][1])) {
        found = d;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel
    const int pd = (found + 7) % 8;
    const std::array<int, 2> prev = {b[0] + dirs[static_cast<std::size_t>(pd)][0], b[1] + dirs[static_cast<std::size_t>(pd)][1]};
    const std::array<int, 2> next = {b[0] + dirs[static_cast<std::size_t>(found)][0], b[1] + dirs[static_cast<std::size_t>(found)][1]};
    if (b == s && second[0] >= 0 && next == second) break;
    if (second[0] < 0) second = next;
    back = dir_of(prev[0] - next[0], prev[1] - next[1]);
    b = next;
    c.points.push_back(b);
  }
  // The walk ends back on the start pixel; drop the duplicate closing point.
  if (c.points.size() > 1 && c.points.back() == s) c.points.pop_back();
  const std::size_t n = c.points.size();
  double twice_area = 0.0;
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    const auto& p = c.points[i];
    const auto& q = c.points[(i + 1) % n];
    c.perimeter += std::hypot(q[0] - p[0], q[1] - p[1]);
    twice_area += static_cast<double>(p[0]) * q[1] - static_cast<double>(q[0]) * p[1];
  }
  c.polygon_area = std::abs(twice_area) / 2.0;
  return c;
}

/// log1p(component count), foreground area fraction, mean and max traced
/// perimeter, mean circularity 4*pi*A/P^2 (A = traced polygon area; 0 when
/// the perimeter is 0).
inline std::vector<double> contour_features(const Plane& plane) {
  const int w = plane.width, h = plane.height;
  const int t = otsu_bin(plane);
  std::vector<std::uint8_t> mask(plane.size(), 0);
  std::size_t fg = 0;
  if (t >= 0) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      mask[i] = quantize(plane.data[i], 256) > t ? 1 : 0;
      fg += mask[i];
    }
  }
  int count = 0;
  const auto labels = label_components(mask, w, h, count);
  std::vector<double> out(5, 0.0);
  out[0] = std::log1p(count);
  out[1] = static_cast<double>(fg) / static_cast<double>(plane.size());
  if (count == 0) return out;
  std::vector<bool> traced(static_cast<std::size_t>(count) + 1, false);
  double perim_sum = 0.0, perim_max = 0.0, circ_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l == 0 || traced[static_cast<std::size_t>(l)]) continue;
    traced[static_cast<std::size_t>(l)] = true;
    const auto c = trace_boundary(labels, w, h, i);
    perim_sum += c.perimeter;
    perim_max = std::max(perim_max, c.perimeter);
    if (c.perimeter > 0.0) circ_sum += 4.0 * std::numbers::pi * c.polygon_area / (c.perimeter * c.perimeter);
  }
  out[2] = perim_sum / count;
  out[3] = perim_max;
  out[4] = circ_sum / count;
  return out;
}

// ---------------------------------------------------------------- Harris

/// R = det(M) - k trace(M)^2 with M the Gaussian-weighted structure tensor of
/// Sobel gradients.
inline std::vector<double> harris_response(const Plane& plane, double k, double sigma) {
  std::vector<double> gx, gy;
  kernel_gradients(plane, EdgeKernel::Sobel, gx, gy);
  std::vector<double> xx(gx.size()), yy(gx.size()), xy(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    xx[i] = gx[i] * gx[i];
    yy[i] = gy[i] * gy[i];
    xy[i] = gx[i] * gy[i];
  }
  xx = gaussian_blur(xx, plane.width, plane.height, sigma);
  yy = gaussian_blur(yy, plane.width, plane.height, sigma);
  xy = gaussian_blur(xy, plane.width, plane.height, sigma);
  std::vector<double> r(gx.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double tr = xx[i] + yy[i];
    r[i] = xx[i] * yy[i] - xy[i] * xy[i] - k * tr * tr;
  }
  return r;
}

/// Corners: pixels above thresh * max(R) that are >= every 8-neighbour,
/// accepted in raster order with no two accepted pixels adjacent.
inline std::vector<std::size_t> harris_corners(const std::vector<double>& r, int w, int h, double thresh) {
  double mx = 0.0;
  for (double v : r) mx = std::max(mx, v);
  std::vector<std::size_t> corners;
  if (mx <= 0.0) return corners;
  std::vector<std::uint8_t> taken(r.size(), 0);
  const double cut = thresh * mx;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (r[i] <= cut || r[i] <= 0.0) continue;
      bool is_max = true, near_taken = false;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (r[j] > r[i]) {
            is_max = false;
            break;
          }
          if (taken[j]) near_taken = true;
        }
      if (is_max && !near_taken) {
        taken[i] = 1;
        corners.push_back(i);
      }
    }
  return corners;
}

/// log1p(corner count), then mean, std and max of the response map.
inline std::vector<double> harris_features(const Plane& plane, const ShapeParams& params) {
  const auto r = harris_response(plane, params.harris_k, params.harris_sigma);
  const auto corners = harris_corners(r, plane.width, plane.height, params.harris_thresh);
  double sum = 0.0, mx = -std::numeric_limits<double>::infinity();
  for (double v : r) {
    sum += v;
    mx = std::max(mx, v);
  }
  const double mean = sum / static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return {std::log1p(static_cast<double>(corners.size())), mean, std::sqrt(ss / static_cast<double>(r.size())), mx};
}

}  // namespace avivis
