#pragma once
// Texture descriptors on a single plane: uniform LBP, GLCM, HOG, Gabor bank,
// radial Fourier spectrum, and Haar wavelet subband statistics.

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "avivis/cooccurrence.hpp"
#include "avivis/fft.hpp"

namespace avivis {

struct TextureParams {
  int lbp_points = 8;
  double lbp_radius = 1.0;
  int glcm_levels = 8;
  std::vector<Offset> glcm_offsets = {{1, 0}, {1, -1}, {0, 1}, {1, 1}};
  int hog_cell = 8;
  int hog_orients = 9;
  int hog_block = 2;
  std::vector<double> gabor_freqs = {0.1, 0.2, 0.3};
  int gabor_orients = 4;
  int fft_radial_bins = 32;
  int wavelet_levels = 2;

  void validate() const {
    if (lbp_points <= 0 || lbp_points > 24 || lbp_radius <= 0 || glcm_levels < 2 ||
        glcm_offsets.empty() || hog_cell <= 0 || hog_orients <= 0 || hog_block <= 0 ||
        gabor_freqs.empty() || gabor_orients <= 0 || fft_radial_bins <= 0 || wavelet_levels <= 0) {
      throw UsageError("invalid texture parameters");
    }
    for (double f : gabor_freqs) {
      if (!(f > 0.0)) throw UsageError("gabor frequencies must be positive");
    }
  }
};

// ---------------------------------------------------------------- LBP

/// Number of circular 0/1 transitions in a P-bit code.
inline int lbp_transitions(unsigned code, int points) {
  const unsigned mask = (points >= 32) ? ~0u : ((1u << points) - 1u);
  const unsigned rotated = ((code >> 1) | (code << (points - 1))) & mask;
  return std::popcount((code ^ rotated) & mask);
}

/// Maps every P-bit code to a histogram bin: uniform codes (at most two
/// transitions) get bins in ascending code order, everything else shares the
/// last bin. P(P-1)+3 bins in total.
inline std::vector<int> lbp_uniform_table(int points) {
  const unsigned n_codes = 1u << points;
  std::vector<int> table(n_codes);
  const int catch_all = points * (points - 1) + 2;
  int next = 0;
  for (unsigned c = 0; c < n_codes; ++c) table[c] = lbp_transitions(c, points) <= 2 ? next++ : catch_all;
  return table;
}

inline int lbp_bin_count(int points) { return points * (points - 1) + 3; }

namespace detail {

// Bilinear sample written as lerps so a flat neighbourhood reproduces its
// value exactly.
inline double bilinear(const Plane& p, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  const int x1 = std::min(x0 + 1, p.width - 1);
  const int y1 = std::min(y0 + 1, p.height - 1);
  const double top = p(x0, y0) + fx * (p(x1, y0) - p(x0, y0));
  const double bot = p(x0, y1) + fx * (p(x1, y1) - p(x0, y1));
  return top + fy * (bot - top);
}

inline double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace detail

/// LBP code of the pixel at (x, y). Neighbour p sits at angle 2*pi*p/P,
/// counter-clockwise from +x with image rows growing downward; bit p is set
/// when the neighbour is >= the centre.
inline unsigned lbp_code(const Plane& plane, int x, int y, int points, double radius) {
  const double c = plane(x, y);
  unsigned code = 0;
  for (int p = 0; p < points; ++p) {
    const double ang = 2.0 * std::numbers::pi * p / points;
    const double sx = x + detail::snap(radius * std::cos(ang));
    const double sy = y - detail::snap(radius * std::sin(ang));
    if (detail::bilinear(plane, sx, sy) >= c) code |= 1u << p;
  }
  return code;
}

inline std::vector<double> lbp_histogram(const Plane& plane, int points, double radius) {
  const int margin = static_cast<int>(std::ceil(radius));
  if (plane.width < 2 * margin + 1 || plane.height < 2 * margin + 1) {
    throw DataError("plane too small for LBP radius");
  }
  const auto table = lbp_uniform_table(points);
  std::vector<double> hist(static_cast<std::size_t>(lbp_bin_count(points)), 0.0);
  std::size_t n = 0;
  for (int y = margin; y < plane.height - margin; ++y) {
    for (int x = margin; x < plane.width - margin; ++x) {
      hist[static_cast<std::size_t>(table[lbp_code(plane, x, y, points, radius)])] += 1.0;
      ++n;
    }
  }
  for (auto& v : hist) v /= static_cast<double>(n);
  return hist;
}

// ---------------------------------------------------------------- GLCM

inline std::vector<double> glcm_features(const Plane& plane, int levels, const std::vector<Offset>& offsets) {
  std::vector<double> out;
  append_haralick(plane, levels, offsets, out);
  return out;
}

// ---------------------------------------------------------------- HOG

/// Centered-difference gradients; the one-pixel border has zero gradient.
inline void centered_gradients(const Plane& p, std::vector<double>& gx, std::vector<double>& gy) {
  gx.assign(p.size(), 0.0);
  gy.assign(p.size(), 0.0);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
      if (x > 0 && x < p.width - 1) gx[i] = p(x + 1, y) - p(x - 1, y);
      if (y > 0 && y < p.height - 1) gy[i] = p(x, y + 1) - p(x, y - 1);
    }
  }
}

inline std::size_t hog_length(int width, int height, int cell, int orients, int block) {
  const int ncx = width / cell, ncy = height / cell;
  if (ncx < block || ncy < block) return 0;
  return static_cast<std::size_t>(ncx - block + 1) * (ncy - block + 1) * block * block * orients;
}

/// Unsigned orientations in [0, 180) with bin b centred at b*180/orients and
/// linear interpolation between neighbouring bins (wrapping). Cells cover
/// whole cell-size tiles; blocks slide one cell at a time and are
/// L2-normalized with epsilon 1e-6.
inline std::vector<double> hog_features(const Plane& plane, int cell, int orients, int block) {
  const int ncx = plane.width / cell, ncy = plane.height / cell;
  if (ncx < block || ncy < block) throw DataError("plane too small for HOG cell/block size");
  std::vector<double> gx, gy;
  centered_gradients(plane, gx, gy);
  const double bin_width = 180.0 / orients;
  std::vector<double> cells(static_cast<std::size_t>(ncx) * ncy * orients, 0.0);
  for (int y = 0; y < ncy * cell; ++y) {
    for (int x = 0; x < ncx * cell; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * plane.width + x;
      const double mag = std::hypot(gx[i], gy[i]);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
      ang = std::fmod(ang + 360.0, 180.0);
      const double pos = ang / bin_width;
      const int b0 = static_cast<int>(std::floor(pos)) % orients;
      const double frac = pos - std::floor(pos);
      const int b1 = (b0 + 1) % orients;
      double* h = &cells[(static_cast<std::size_t>(y / cell) * ncx + x / cell) * orients];
      h[b0] += mag * (1.0 - frac);
      h[b1] += mag * frac;
    }
  }
  std::vector<double> out;
  out.reserve(hog_length(plane.width, plane.height, cell, orients, block));
  constexpr double eps = 1e-6;
  for (int by = 0; by + block <= ncy; ++by) {
    for (int bx = 0; bx + block <= ncx; ++bx) {
      const std::size_t start = out.size();
      for (int cy = by; cy < by + block; ++cy) {
        for (int cx = bx; cx < bx + block; ++cx) {
          const double* h = &cells[(static_cast<std::size_t>(cy) * ncx + cx) * orients];
          out.insert(out.end(), h, h + orients);
        }
      }
      double ss = 0.0;
      for (std::size_t i = start; i < out.size(); ++i) ss += out[i] * out[i];
      const double norm = std::sqrt(ss + eps * eps);
      for (std::size_t i = start; i < out.size(); ++i) out[i] /= norm;
    }
  }
  return out;
}

// ---------------------------------------------------------------- Gabor

/// Symmetric (edge-repeating) reflection of an index into [0, n).
inline int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

/// Complex Gabor kernel of half-width ceil(3*sigma), sigma = 0.56/freq,
/// Gaussian envelope normalized by 1/(2 pi sigma^2), then shifted to zero mean.
struct GaborKernel {
  int half = 0;
  std::vector<std::complex<double>> taps;  // (2*half+1)^2, row-major, (dx,dy) = (-half..half)

  std::complex<double> at(int dx, int dy) const {
    const int side = 2 * half + 1;
    return taps[static_cast<std::size_t>(dy + half) * side + (dx + half)];
  }
};

inline GaborKernel gabor_kernel(double freq, double theta) {
  const double sigma = 0.56 / freq;
  GaborKernel k;
  k.half = static_cast<int>(std::ceil(3.0 * sigma));
  const int side = 2 * k.half + 1;
  k.taps.resize(static_cast<std::size_t>(side) * side);
  std::complex<double> mean = 0.0;
  const double norm = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  for (int dy = -k.half; dy <= k.half; ++dy) {
    for (int dx = -k.half; dx <= k.half; ++dx) {
      const double xr = dx * std::cos(theta) + dy * std::sin(theta);
      const double env = norm * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      const std::complex<double> v = env * std::polar(1.0, 2.0 * std::numbers::pi * freq * xr);
      k.taps[static_cast<std::size_t>(dy + k.half) * side + (dx + k.half)] = v;
      mean += v;
    }
  }
  mean /= static_cast<double>(k.taps.size());
  for (auto& v : k.taps) v -= mean;
  return k;
}

/// Magnitude of the convolution of the symmetrically padded plane with the
/// kernel, computed through the FFT.
inline std::vector<double> gabor_magnitude(const Plane& plane, const GaborKernel& k) {
  const int h = k.half;
  const int ph = plane.height + 2 * h, pw = plane.width + 2 * h;
  Fft2d fft(ph, pw);
  std::vector<std::complex<double>> img(static_cast<std::size_t>(ph) * pw);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      img[static_cast<std::size_t>(y) * pw + x] =
          plane(reflect_index(x - h, plane.width), reflect_index(y - h, plane.height));
    }
  }
  std::vector<std::complex<double>> ker(img.size(), 0.0);
  for (int dy = -h; dy <= h; ++dy) {
    for (int dx = -h; dx <= h; ++dx) {
      const int yy = (dy + ph) % ph, xx = (dx + pw) % pw;
      ker[static_cast<std::size_t>(yy) * pw + xx] = k.at(dx, dy);
    }
  }
  fft.forward(img);
  fft.forward(ker);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] *= ker[i];
  fft.inverse(img);
  const double scale = 1.0 / (static_cast<double>(ph) * pw);
  std::vector<double> mag(plane.size());
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < plane.width; ++x) {
      mag[static_cast<std::size_t>(y) * plane.width + x] =
          std::abs(img[static_cast<std::size_t>(y + h) * pw + (x + h)] * scale);
    }
  }
  return mag;
}

/// Orientations k*pi/orients. For each (freq, orientation): mean and std of
/// the response magnitude.
inline std::vector<double> gabor_features(const Plane& plane, const std::vector<double>& freqs, int orients) {
  std::vector<double> out;
  out.reserve(2 * freqs.size() * static_cast<std::size_t>(orients));
  for (double f : freqs) {
    for (int o = 0; o < orients; ++o) {
      const auto mag = gabor_magnitude(plane, gabor_kernel(f, std::numbers::pi * o / orients));
      double sum = 0.0;
      for (double v : mag) sum += v;
      const double mean = sum / static_cast<double>(mag.size());
      double ss = 0.0;
      for (double v : mag) ss += (v - mean) * (v - mean);
      out.push_back(mean);
      out.push_back(std::sqrt(ss / static_cast<double>(mag.size())));
    }
  }
  return out;
}

// ---------------------------------------------------------------- Fourier

/// |DFT| of the mean-centred plane, row-major (v rows, u columns).
inline std::vector<double> fft_magnitude(const Plane& plane) {
  double mean = 0.0;
  for (double v : plane.data) mean += v;
  mean /= static_cast<double>(plane.size());
  std::vector<std::complex<double>> buf(plane.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = plane.data[i] - mean;
  Fft2d fft(plane.height, plane.width);
  fft.forward(buf);
  std::vector<double> mag(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) mag[i] = std::abs(buf[i]);
  return mag;
}

/// Radial frequency in cycles/pixel of DFT index (u, v), using signed
/// frequencies.
inline double radial_frequency(int u, int v, int width, int height) {
  const double fu = static_cast<double>(u <= width / 2 ? u : u - width) / width;
  const double fv = static_cast<double>(v <= height / 2 ? v : v - height) / height;
  return std::sqrt(fu * fu + fv * fv);
}

/// Mean log1p magnitude in `bins` equal annuli over [0, sqrt(0.5)], then the
/// global mean and std of log1p magnitude and the magnitude-weighted mean
/// radius. DC excluded throughout.
inline std::vector<double> fft_features(const Plane& plane, int bins) {
  const auto mag = fft_magnitude(plane);
  const double rmax = std::sqrt(0.5);
  std::vector<double> sum(static_cast<std::size_t>(bins), 0.0), count(static_cast<std::size_t>(bins), 0.0);
  double lsum = 0.0, lsq = 0.0, msum = 0.0, rmsum = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < plane.height; ++v) {
    for (int u = 0; u < plane.width; ++u) {
      if (u == 0 && v == 0) continue;
      const double m = mag[static_cast<std::size_t>(v) * plane.width + u];
      const double r = radial_frequency(u, v, plane.width, plane.height);
      const int b = std::min(static_cast<int>(r / rmax * bins), bins - 1);
      const double lm = std::log1p(m);
      sum[static_cast<std::size_t>(b)] += lm;
      count[static_cast<std::size_t>(b)] += 1.0;
      lsum += lm;
      lsq += lm * lm;
      msum += m;
      rmsum += r * m;
      ++n;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(bins) + 3, 0.0);
  for (int b = 0; b < bins; ++b) {
    if (count[static_cast<std::size_t>(b)] > 0) out[static_cast<std::size_t>(b)] = sum[static_cast<std::size_t>(b)] / count[static_cast<std::size_t>(b)];
  }
  if (n > 0) {
    const double mean = lsum / static_cast<double>(n);
    out[static_cast<std::size_t>(bins)] = mean;
    out[static_cast<std::size_t>(bins) + 1] = std::sqrt(std::max(0.0, lsq / static_cast<double>(n) - mean * mean));
  }
  out[static_cast<std::size_t>(bins) + 2] = msum > 0.0 ? rmsum / msum : 0.0;
  return out;
}

// ---------------------------------------------------------------- Haar

struct HaarLevel {
  Plane ll, lh, hl, hh;
};

/// One orthonormal 2-D Haar step. For the 2x2 block [[a, b], [c, d]]:
/// LL = (a+b+c+d)/2, LH = (a-b+c-d)/2, HL = (a+b-c-d)/2, HH = (a-b-c+d)/2.
/// An odd trailing row or column is dropped.
inline HaarLevel haar_forward(const Plane& in) {
  const int w = in.width / 2, h = in.height / 2;
  HaarLevel out{Plane(w, h, in.channel), Plane(w, h, in.channel), Plane(w, h, in.channel),
                Plane(w, h, in.channel)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = in(2 * x, 2 * y), b = in(2 * x + 1, 2 * y);
      const double c = in(2 * x, 2 * y + 1), d = in(2 * x + 1, 2 * y + 1);
      out.ll(x, y) = 0.5 * (a + b + c + d);
      out.lh(x, y) = 0.5 * (a - b + c - d);
      out.hl(x, y) = 0.5 * (a + b - c - d);
      out.hh(x, y) = 0.5 * (a - b - c + d);
    }
  }
  return out;
}

inline Plane haar_inverse(const HaarLevel& lv) {
  Plane out(lv.ll.width * 2, lv.ll.height * 2, lv.ll.channel);
  for (int y = 0; y < lv.ll.height; ++y) {
    for (int x = 0; x < lv.ll.width; ++x) {
      const double s = lv.ll(x, y), h = lv.lh(x, y), v = lv.hl(x, y), d = lv.hh(x, y);
      out(2 * x, 2 * y) = 0.5 * (s + h + v + d);
      out(2 * x + 1, 2 * y) = 0.5 * (s - h + v - d);
      out(2 * x, 2 * y + 1) = 0.5 * (s + h - v - d);
      out(2 * x + 1, 2 * y + 1) = 0.5 * (s - h - v + d);
    }
  }
  return out;
}

struct SubbandStats {
  double energy = 0.0;  // sum of squares
  double mean_abs = 0.0;
  double std = 0.0;
};

inline SubbandStats subband_stats(const Plane& p) {
  SubbandStats s;
  if (p.size() == 0) return s;
  double sum = 0.0;
  for (double v : p.data) {
    s.energy += v * v;
    s.mean_abs += std::abs(v);
    sum += v;
  }
  const double n = static_cast<double>(p.size());
  s.mean_abs /= n;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : p.data) ss += (v - mean) * (v - mean);
  s.std = std::sqrt(ss / n);
  return s;
}

/// (energy, mean |c|, std) for LH, HL, HH of each level, then the final LL.
inline std::vector<double> wavelet_features(const Plane& plane, int levels) {
  if (std::min(plane.width, plane.height) < (1 << levels)) {
    throw DataError("plane too small for the requested wavelet levels");
  }
  std::vector<double> out;
  out.reserve(3 * (3 * static_cast<std::size_t>(levels) + 1));
  Plane cur = plane;
  for (int l = 0; l < levels; ++l) {
    HaarLevel lv = haar_forward(cur);
    for (const Plane* band : {&lv.lh, &lv.hl, &lv.hh}) {
      const auto s = subband_stats(*band);
      out.insert(out.end(), {s.energy, s.mean_abs, s.std});
    }
    cur = std::move(lv.ll);
  }
  const auto s = subband_stats(cur);
  out.insert(out.end(), {s.energy, s.mean_abs, s.std});
  return out;
}

}  // namespace avivis
