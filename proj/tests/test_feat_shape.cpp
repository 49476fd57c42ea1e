#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace avivis;
using namespace testsupport;

namespace {

Plane filled(int w, int h, const std::function<double(int, int)>& f) {
  Plane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p.data[static_cast<std::size_t>(y * w + x)] = f(x, y);
  return p;
}

Plane square(int n, int x0, int y0, int r) {
  return filled(n, n, [&](int x, int y) { return x >= x0 && x < x0 + r && y >= y0 && y < y0 + r ? 1.0 : 0.0; });
}

// Clockwise quarter turn of a square plane: (x, y) -> (n-1-y, x).
Plane rotate(const Plane& p) {
  const int n = p.width;
  Plane r(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) r.data[static_cast<std::size_t>(x * n + (n - 1 - y))] = p(x, y);
  return r;
}

}  // namespace

TEST(EdgeStats, ConstantPlaneAllZeroStats) {
  const Plane p(16, 16, ChannelId::Gray, 0.4);
  for (auto kind : {EdgeKernel::Sobel, EdgeKernel::Prewitt}) {
    const auto f = edge_features(p, kind, 4);
    ASSERT_EQ(f.size(), edge_stats_length(4));
    for (std::size_t i = 0; i < 34; ++i) EXPECT_EQ(f[i], 0.0);
    EXPECT_EQ(f[34], 1.0);  // all magnitudes in the lowest histogram bin
  }
}

TEST(EdgeStats, VerticalStepOnlyInEdgeColumns) {
  const Plane p = filled(16, 16, [](int x, int) { return x < 8 ? 0.0 : 1.0; });
  std::vector<double> gx, gy;
  kernel_gradients(p, EdgeKernel::Sobel, gx, gy);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const double v = gx[static_cast<std::size_t>(y * 16 + x)];
      if (x == 7 || x == 8) EXPECT_EQ(v, 4.0);
      else EXPECT_EQ(v, 0.0);
      EXPECT_EQ(gy[static_cast<std::size_t>(y * 16 + x)], 0.0);
    }
  const auto f = sobel_features(p, 4);
  for (int gyc = 0; gyc < 4; ++gyc)
    for (int gxc = 0; gxc < 4; ++gxc) {
      const double mean = f[static_cast<std::size_t>(2 * (gyc * 4 + gxc))];
      if (gxc == 1 || gxc == 2) EXPECT_GT(mean, 0.0);
      else EXPECT_EQ(mean, 0.0);
    }
}

TEST(EdgeStats, SobelPrewittRatioOnRamp) {
  const Plane p = filled(16, 16, [](int x, int) { return x / 16.0; });
  const auto s = gradient_magnitude(p, EdgeKernel::Sobel);
  const auto q = gradient_magnitude(p, EdgeKernel::Prewitt);
  for (int y = 0; y < 16; ++y)
    for (int x = 1; x < 15; ++x) {
      const std::size_t i = static_cast<std::size_t>(y * 16 + x);
      ASSERT_GT(q[i], 0.0);
      EXPECT_NEAR(s[i] / q[i], 4.0 / 3.0, 1e-12);
    }
}

TEST(EdgeStats, RandomMatchesKernelOracle) {
  Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    const Plane p = random_plane(rng, 16 + static_cast<int>(rng.below(6)), 16 + static_cast<int>(rng.below(6)));
    EXPECT_LE(max_rel_diff(sobel_features(p, 4), oracle::edge_stats(p, true, 4), 1e-9), 1e-6);
    EXPECT_LE(max_rel_diff(prewitt_features(p, 4), oracle::edge_stats(p, false, 4), 1e-9), 1e-6);
  }
}

TEST(EdgeStatsProperty, QuarterTurnPermutesCells) {
  Rng rng(42);
  for (int t = 0; t < 10; ++t) {
    const Plane p = random_plane(rng, 16, 16);
    const Plane r = rotate(p);
    for (auto kind : {EdgeKernel::Sobel, EdgeKernel::Prewitt}) {
      const auto a = edge_features(p, kind, 4), b = edge_features(r, kind, 4);
      for (int cy = 0; cy < 4; ++cy)
        for (int cx = 0; cx < 4; ++cx) {
          const std::size_t src = static_cast<std::size_t>(2 * (cy * 4 + cx));
          const std::size_t dst = static_cast<std::size_t>(2 * (cx * 4 + (3 - cy)));
          EXPECT_NEAR(a[src], b[dst], 1e-6);
          EXPECT_NEAR(a[src + 1], b[dst + 1], 1e-6);
        }
      for (std::size_t i = 32; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6) << i;
    }
  }
}

TEST(Gaussian, TapsNormalized) {
  for (double s : {0.5, 1.0, 1.4, 3.0}) {
    const auto k = gaussian_taps(s);
    double sum = 0;
    for (double v : k) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(k.size(), 2 * static_cast<std::size_t>(std::ceil(3 * s)) + 1);
  }
}

TEST(Gaussian, SeparableMatchesTwoDimensional) {
  Rng rng(43);
  const Plane p = random_plane(rng, 13, 11);
  const auto a = gaussian_blur(p.data, 13, 11, 1.4);
  const auto b = oracle::blur(p.data, 13, 11, 1.4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Canny, ConstantPlaneNoEdges) {
  const Plane p(16, 16, ChannelId::Gray, 0.8);
  const auto f = canny_features(p, ShapeParams{});
  ASSERT_EQ(f.size(), 17u);
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(Canny, StepEdgeIsOnePixelLine) {
  const int n = 32;
  const Plane p = filled(n, n, [](int x, int) { return x < 16 ? 0.1 : 0.9; });
  const auto e = canny_edges(p, ShapeParams{});
  int columns = 0;
  for (int x = 0; x < n; ++x) {
    int c = 0;
    for (int y = 0; y < n; ++y) c += e[static_cast<std::size_t>(y * n + x)];
    if (c > 0) {
      ++columns;
      EXPECT_TRUE(x == 15 || x == 16);
      EXPECT_EQ(c, n - 2);  // the one-pixel frame never holds edges
    }
  }
  EXPECT_EQ(columns, 1);
  const auto f = canny_features(p, ShapeParams{});
  EXPECT_NEAR(f.back(), 1.0 / n, 0.1 / n);
}

TEST(Canny, RandomMatchesOracle) {
  Rng rng(44);
  const ShapeParams sp;
  for (int t = 0; t < 20; ++t) {
    const Plane p = random_plane(rng, 16, 16);
    const auto got = canny_edges(p, sp);
    const auto want = oracle::canny(p, sp.canny_low, sp.canny_high, sp.canny_sigma);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(static_cast<int>(got[i]), want[i]) << i;
    EXPECT_LE(max_rel_diff(canny_features(p, sp), oracle::canny_features(p, sp.canny_low, sp.canny_high, sp.canny_sigma, 4)), 1e-12);
  }
}

TEST(CannyProperty, DensitiesInUnitRange) {
  Rng rng(45);
  for (int t = 0; t < 20; ++t) {
    Plane p = random_plane(rng, 8 + static_cast<int>(rng.below(20)), 8 + static_cast<int>(rng.below(20)));
    if (t % 2) p = filled(p.width, p.height, [&](int x, int y) { return (x / 3 + y / 5) % 2 ? 0.9 : 0.1; });
    for (double v : canny_features(p, ShapeParams{})) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Contour, AllZeroPlane) {
  const Plane p(16, 16, ChannelId::Gray, 0.0);
  EXPECT_EQ(contour_features(p), std::vector<double>(5, 0.0));
}

TEST(Contour, FilledSquare) {
  const int n = 32, r = 10;
  const auto f = contour_features(square(n, 5, 7, r));
  EXPECT_DOUBLE_EQ(f[0], std::log1p(1.0));
  EXPECT_DOUBLE_EQ(f[1], static_cast<double>(r * r) / (n * n));
  EXPECT_NEAR(f[2], 4.0 * r, 4.0);
  EXPECT_EQ(f[2], f[3]);
}

TEST(Contour, DiskRounderThanSquare) {
  const int n = 40;
  const Plane disk = filled(n, n, [](int x, int y) { return (x - 20) * (x - 20) + (y - 20) * (y - 20) <= 64 ? 1.0 : 0.0; });
  double area = 0;
  for (double v : disk.data) area += v;
  const int side = static_cast<int>(std::lround(std::sqrt(area)));
  const auto d = contour_features(disk), s = contour_features(square(n, 5, 5, side));
  EXPECT_GT(d[4], s[4]);
}

TEST(Contour, OtsuMatchesBruteForce) {
  Rng rng(46);
  for (int t = 0; t < 30; ++t) {
    Plane p = random_plane(rng, 12, 12);
    if (t % 5 == 0) p = Plane(12, 12, ChannelId::Gray, 0.5);
    EXPECT_EQ(otsu_bin(p), oracle::otsu(p));
  }
}

TEST(Contour, LabelsMatchUnionFind) {
  Rng rng(47);
  for (int t = 0; t < 30; ++t) {
    const int w = 5 + static_cast<int>(rng.below(15)), h = 5 + static_cast<int>(rng.below(15));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w * h));
    std::vector<int> imask(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) imask[i] = mask[i] = rng.uniform() < 0.4;
    int c1 = 0, c2 = 0;
    EXPECT_EQ(label_components(mask, w, h, c1), oracle::components(imask, w, h, c2));
    EXPECT_EQ(c1, c2);
  }
}

TEST(Contour, RandomMatchesOracle) {
  Rng rng(48);
  for (int t = 0; t < 20; ++t) {
    const Plane p = random_plane(rng, 16, 16);
    EXPECT_LE(max_rel_diff(contour_features(p), oracle::contour(p), 1e-12), 1e-9);
  }
}

TEST(Harris, ConstantPlaneNoCorners) {
  const Plane p(16, 16, ChannelId::Gray, 0.3);
  const auto f = harris_features(p, ShapeParams{});
  EXPECT_EQ(f[0], 0.0);
}

TEST(Harris, SquareHasFourCorners) {
  const Plane p = square(32, 10, 10, 12);
  const auto r = harris_response(p, 0.04, 1.0);
  const auto corners = harris_corners(r, 32, 32, 0.1);
  ASSERT_EQ(corners.size(), 4u);
  for (auto i : corners) {
    const int x = static_cast<int>(i % 32), y = static_cast<int>(i / 32);
    EXPECT_TRUE(std::abs(x - 10) <= 2 || std::abs(x - 21) <= 2) << x;
    EXPECT_TRUE(std::abs(y - 10) <= 2 || std::abs(y - 21) <= 2) << y;
  }
}

TEST(Harris, StraightEdgeHasNoPositiveResponse) {
  const Plane p = filled(24, 24, [](int x, int) { return x < 12 ? 0.0 : 1.0; });
  const auto r = harris_response(p, 0.04, 1.0);
  for (double v : r) EXPECT_LE(v, 0.0);
  EXPECT_TRUE(harris_corners(r, 24, 24, 0.01).empty());
}

TEST(Harris, RandomMatchesOracle) {
  Rng rng(49);
  const ShapeParams sp;
  for (int t = 0; t < 20; ++t) {
    const Plane p = random_plane(rng, 16, 16);
    const auto r = harris_response(p, sp.harris_k, sp.harris_sigma);
    const auto o = oracle::harris_response(p, sp.harris_k, sp.harris_sigma);
    EXPECT_LE(max_rel_diff(r, o, 1e-9), 1e-6);
    EXPECT_EQ(static_cast<int>(harris_corners(r, 16, 16, sp.harris_thresh).size()), oracle::harris_count(o, 16, 16, sp.harris_thresh));
    EXPECT_LE(max_rel_diff(harris_features(p, sp), oracle::harris(p, sp.harris_k, sp.harris_sigma, sp.harris_thresh), 1e-9), 1e-6);
  }
}

TEST(ShapeProperty, FiniteOutputs) {
  Rng rng(50);
  const ShapeParams sp;
  for (int t = 0; t < 20; ++t) {
    Plane p = random_plane(rng, 8 + static_cast<int>(rng.below(12)), 8 + static_cast<int>(rng.below(12)));
    if (t % 4 == 0) p = Plane(p.width, p.height, ChannelId::Gray, rng.uniform());
    for (const auto& f : {sobel_features(p, 4), prewitt_features(p, 4), canny_features(p, sp), contour_features(p), harris_features(p, sp)})
      for (double v : f) EXPECT_TRUE(std::isfinite(v));
    const auto c = contour_features(p);
    EXPECT_GE(c[1], 0.0);
    EXPECT_LE(c[1], 1.0);
  }
}
