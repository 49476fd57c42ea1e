#pragma once
// Raster and plane types, PNG/JPEG decoding, PNG encoding, bilinear resize.

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "avivis/common.hpp"

namespace avivis {

/// Decoded 8-bit image, row-major R,G,B triples.
struct RasterRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RasterRGB() = default;
  RasterRGB(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* at(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = at(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  bool valid() const {
    return width > 0 && height > 0 && data.size() == pixel_count() * 3;
  }
};

enum class ChannelId : int { Gray = 0, R, G, B, H, S, V, L, A, Bstar };
inline constexpr int kChannelCount = 10;

inline const char* channel_name(ChannelId c) {
  static constexpr std::array<const char*, kChannelCount> names = {
      "Gray", "R", "G", "B", "H", "S", "V", "L", "A", "Bstar"};
  return names[static_cast<std::size_t>(c)];
}

/// Single scalar channel, values normalized to [0, 1].
struct Plane {
  int width = 0;
  int height = 0;
  ChannelId channel = ChannelId::Gray;
  std::vector<double> data;

  Plane() = default;
  Plane(int w, int h, ChannelId c = ChannelId::Gray, double fill = 0.0)
      : width(w), height(h), channel(c), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const { return data.size(); }
  double& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  // Coordinates clamped into the image (replicate border).
  double clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return (*this)(x, y);
  }
};

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool decode_png(const std::vector<unsigned char>& bytes, RasterRGB& out, std::string& err) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    err = image.message;
    return false;
  }
  image.format = PNG_FORMAT_RGB;
  RasterRGB r(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, r.data.data(), 0, nullptr)) {
    err = image.message;
    png_image_free(&image);
    return false;
  }
  out = std::move(r);
  return true;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, mgr->message);
  std::longjmp(mgr->jump, 1);
}

// No objects with non-trivial destructors may live across setjmp here.
inline bool decode_jpeg_raw(const unsigned char* data, unsigned long size, unsigned char* dst,
                            std::size_t dst_size, int* w, int* h, char* msg) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.message[0] = '\0';
  if (setjmp(jerr.jump)) {
    std::snprintf(msg, JMSG_LENGTH_MAX, "%s", jerr.message);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *w = static_cast<int>(cinfo.output_width);
  *h = static_cast<int>(cinfo.output_height);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  if (dst == nullptr || stride * cinfo.output_height > dst_size) {
    jpeg_abort_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;  // dimensions only
  }
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = dst + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

inline bool decode_jpeg(const std::vector<unsigned char>& bytes, RasterRGB& out, std::string& err) {
  char msg[JMSG_LENGTH_MAX] = {0};
  int w = 0, h = 0;
  if (!decode_jpeg_raw(bytes.data(), static_cast<unsigned long>(bytes.size()), nullptr, 0, &w, &h,
                       msg)) {
    err = msg;
    return false;
  }
  if (w <= 0 || h <= 0) {
    err = "empty jpeg";
    return false;
  }
  RasterRGB r(w, h);
  if (!decode_jpeg_raw(bytes.data(), static_cast<unsigned long>(bytes.size()), r.data.data(),
                       r.data.size(), &w, &h, msg)) {
    err = msg;
    return false;
  }
  out = std::move(r);
  return true;
}

}  // namespace detail

/// Decodes a PNG or JPEG file (format sniffed from magic bytes).
/// Throws DataError on failure.
inline RasterRGB decode_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  RasterRGB out;
  std::string err = "unrecognized image format";
  bool ok = false;
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
    ok = detail::decode_png(bytes, out, err);
  } else if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    ok = detail::decode_jpeg(bytes, out, err);
  }
  if (!ok) throw DataError("cannot decode " + path.string() + ": " + err);
  return out;
}

inline void write_png(const std::filesystem::path& path, const RasterRGB& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + image.message);
  }
}

/// Bilinear resize with corner alignment: output corners sample input corners
/// exactly. A one-pixel output axis samples the input centre.
inline RasterRGB resize_bilinear(const RasterRGB& src, int out_w, int out_h) {
  if (!src.valid() || out_w <= 0 || out_h <= 0) throw UsageError("resize: invalid dimensions");
  if (src.width == out_w && src.height == out_h) return src;
  RasterRGB dst(out_w, out_h);
  auto coord = [](int i, int n_out, int n_in) {
    if (n_out == 1) return 0.5 * (n_in - 1);
    return static_cast<double>(i) * (n_in - 1) / (n_out - 1);
  };
  for (int y = 0; y < out_h; ++y) {
    const double sy = coord(y, out_h, src.height);
    const int y0 = std::min(static_cast<int>(sy), src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double sx = coord(x, out_w, src.width);
      const int x0 = std::min(static_cast<int>(sx), src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(x0, y0)[c] + fx * (src.at(x1, y0)[c] - src.at(x0, y0)[c]);
        const double bot = src.at(x0, y1)[c] + fx * (src.at(x1, y1)[c] - src.at(x0, y1)[c]);
        const double v = top + fy * (bot - top);
        dst.at(x, y)[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return dst;
}

}  // namespace avivis
