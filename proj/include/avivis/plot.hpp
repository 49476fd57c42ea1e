#pragma once
// Minimal raster plots written as PNG: confusion heatmap and training curves.

#include <array>
#include <cmath>
#include <filesystem>
#include <string>

#include "avivis/image.hpp"
#include "avivis/metrics.hpp"
#include "avivis/mlp.hpp"

namespace avivis {

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h, Rgb bg = {255, 255, 255}) {
    img_.width = w;
    img_.height = h;
    img_.data.resize(static_cast<std::size_t>(w) * h * 3);
    fill_rect(0, 0, w, h, bg);
  }

  const RasterRGB& image() const { return img_; }
  int width() const { return img_.width; }
  int height() const { return img_.height; }

  void put(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    auto* p = &img_.data[(static_cast<std::size_t>(y) * img_.width + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void fill_rect(int x0, int y0, int w, int h, Rgb c) {
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) put(x, y, c);
  }

  void rect(int x0, int y0, int w, int h, Rgb c) {
    line(x0, y0, x0 + w - 1, y0, c);
    line(x0, y0 + h - 1, x0 + w - 1, y0 + h - 1, c);
    line(x0, y0, x0, y0 + h - 1, c);
    line(x0 + w - 1, y0, x0 + w - 1, y0 + h - 1, c);
  }

  // Bresenham.
  void line(int x0, int y0, int x1, int y1, Rgb c, int thick = 1) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      for (int t = 0; t < thick; ++t) {
        put(x0, y0 + t, c);
        put(x0 + t, y0, c);
      }
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  /// 5x7 glyphs, upper-case only; unknown characters render blank.
  void text(int x, int y, const std::string& s, Rgb c, int scale = 1) {
    for (char ch : s) {
      const auto& g = glyph(ch);
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (g[static_cast<std::size_t>(row)] & (0x10 >> col)) fill_rect(x + col * scale, y + row * scale, scale, scale, c);
      x += 6 * scale;
    }
  }

  static int text_width(const std::string& s, int scale = 1) { return static_cast<int>(s.size()) * 6 * scale; }

 private:
  static const std::array<std::uint8_t, 7>& glyph(char ch) {
    static const std::array<std::uint8_t, 7> blank{};
    static const std::array<std::array<std::uint8_t, 7>, 10> digits{{
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}}};
    static const std::array<std::array<std::uint8_t, 7>, 26> letters{{
        {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
        {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
        {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
        {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
        {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
        {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
        {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
        {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
        {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
        {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
        {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}}};
    static const std::array<std::uint8_t, 7> dot{0, 0, 0, 0, 0, 0x0C, 0x0C}, dash{0, 0, 0, 0x1F, 0, 0, 0},
        colon{0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}, underscore{0, 0, 0, 0, 0, 0, 0x1F},
        slash{0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10};
    if (ch >= '0' && ch <= '9') return digits[static_cast<std::size_t>(ch - '0')];
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    if (ch >= 'A' && ch <= 'Z') return letters[static_cast<std::size_t>(ch - 'A')];
    switch (ch) {
      case '.': return dot;
      case '-': return dash;
      case ':': return colon;
      case '_': return underscore;
      case '/': return slash;
      default: return blank;
    }
  }

  RasterRGB img_;
};

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kGrey{200, 200, 200};
inline constexpr Rgb kBlue{31, 119, 180};
inline constexpr Rgb kOrange{255, 127, 14};

/// Heatmap shaded by row-normalized counts, with raw counts in each cell.
inline RasterRGB render_confusion(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  const int n = static_cast<int>(cm.n_classes);
  const int cell = 56, left = 90, top = 40;
  Canvas cv(left + n * cell + 20, top + n * cell + 50);
  cv.text(left, 12, "CONFUSION MATRIX", kBlack, 2);
  for (int t = 0; t < n; ++t) {
    const double row = static_cast<double>(std::max<std::size_t>(cm.row_sum(static_cast<std::size_t>(t)), 1));
    for (int p = 0; p < n; ++p) {
      const auto count = cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
      const double f = static_cast<double>(count) / row;
      const Rgb c{static_cast<std::uint8_t>(255 - 220 * f), static_cast<std::uint8_t>(255 - 160 * f), 255};
      const int x = left + p * cell, y = top + t * cell;
      cv.fill_rect(x, y, cell, cell, c);
      cv.rect(x, y, cell, cell, kGrey);
      const std::string s = std::to_string(count);
      cv.text(x + (cell - Canvas::text_width(s, 2)) / 2, y + cell / 2 - 7, s, f > 0.6 ? Rgb{255, 255, 255} : kBlack, 2);
    }
    const std::string label = static_cast<std::size_t>(t) < names.size() ? names[static_cast<std::size_t>(t)].substr(0, 12) : std::to_string(t);
    cv.text(4, top + t * cell + cell / 2 - 3, label, kBlack);
    cv.text(left + t * cell + 2, top + n * cell + 8, label.substr(0, 9), kBlack);
  }
  cv.text(left, top + n * cell + 28, "ROWS TRUE / COLUMNS PREDICTED", kBlack);
  return cv.image();
}

namespace detail {

inline void plot_series(Canvas& cv, int x0, int y0, int w, int h, const std::string& title,
                        const std::vector<std::vector<double>>& series, const std::vector<Rgb>& colors) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t len = 0;
  for (const auto& s : series) {
    len = std::max(len, s.size());
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) {
    hi = (std::isfinite(lo) ? lo : 0.0) + 1.0;
    lo = hi - 2.0;
  }
  cv.rect(x0, y0, w, h, kBlack);
  cv.text(x0, y0 - 12, title, kBlack);
  cv.text(x0 - 50, y0, fmt(hi, 3), kBlack);
  cv.text(x0 - 50, y0 + h - 7, fmt(lo, 3), kBlack);
  cv.text(x0, y0 + h + 6, "1", kBlack);
  cv.text(x0 + w - Canvas::text_width(std::to_string(len)), y0 + h + 6, std::to_string(len), kBlack);
  auto px = [&](std::size_t i) { return x0 + 2 + (len > 1 ? static_cast<int>(std::lround(static_cast<double>(i) * (w - 5) / static_cast<double>(len - 1))) : 0); };
  auto py = [&](double v) { return y0 + h - 3 - static_cast<int>(std::lround((v - lo) / (hi - lo) * (h - 5))); };
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) cv.line(px(i), py(s[i]), px(i + 1), py(s[i + 1]), colors[k], 2);
    if (s.size() == 1) cv.fill_rect(px(0) - 1, py(s[0]) - 1, 3, 3, colors[k]);
  }
}

}  // namespace detail

/// Two panels: loss and accuracy per epoch, train vs validation.
inline RasterRGB render_history(const std::vector<EpochRecord>& h) {
  std::vector<double> tl, vl, ta, va;
  for (const auto& e : h) {
    tl.push_back(e.train_loss);
    vl.push_back(e.val_loss);
    ta.push_back(e.train_accuracy);
    va.push_back(e.val_accuracy);
  }
  Canvas cv(720, 300);
  detail::plot_series(cv, 60, 40, 280, 200, "LOSS", {tl, vl}, {kBlue, kOrange});
  detail::plot_series(cv, 420, 40, 280, 200, "ACCURACY", {ta, va}, {kBlue, kOrange});
  cv.fill_rect(60, 270, 12, 4, kBlue);
  cv.text(78, 268, "TRAIN", kBlack);
  cv.fill_rect(140, 270, 12, 4, kOrange);
  cv.text(158, 268, "VALIDATION", kBlack);
  cv.text(420, 268, "EPOCH", kBlack);
  return cv.image();
}

}  // namespace avivis
