#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace avivis;
using namespace testsupport;

namespace {

Plane constant(int w, int h, double v) { return Plane(w, h, ChannelId::Gray, v); }

Plane half_split(int w, int h) {
  Plane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p.data[static_cast<std::size_t>(y * w + x)] = x < w / 2 ? 0.0 : 1.0;
  return p;
}

Plane transposed(const Plane& p) {
  Plane t(p.height, p.width, p.channel);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) t.data[static_cast<std::size_t>(x * p.height + y)] = p(x, y);
  return t;
}

void expect_blocks_sum_to_one(const std::vector<double>& v, std::size_t block) {
  ASSERT_EQ(v.size() % block, 0u);
  for (std::size_t b = 0; b < v.size(); b += block) {
    double s = 0;
    for (std::size_t i = b; i < b + block; ++i) {
      EXPECT_GE(v[i], 0.0);
      s += v[i];
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

}  // namespace

TEST(ColorHistogram, ConstantPlanePointMass) {
  const Plane p = constant(10, 10, 0.3);
  const auto h = color_histogram({&p, &p, &p}, 32);
  ASSERT_EQ(h.size(), 96u);
  for (int c = 0; c < 3; ++c)
    for (int b = 0; b < 32; ++b) EXPECT_EQ(h[static_cast<std::size_t>(c * 32 + b)], b == 9 ? 1.0 : 0.0);
}

TEST(ColorHistogram, TwoValuePlane) {
  const Plane p = half_split(8, 6);
  const auto h = color_histogram({&p, &p, &p}, 32);
  EXPECT_EQ(h[0], 0.5);
  EXPECT_EQ(h[31], 0.5);
  for (int b = 1; b < 31; ++b) EXPECT_EQ(h[static_cast<std::size_t>(b)], 0.0);
}

TEST(ColorHistogram, RandomMatchesCountingOracle) {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const Plane a = random_plane(rng, 15, 9), b = random_plane(rng, 15, 9), c = random_plane(rng, 15, 9);
    const int bins = 1 + static_cast<int>(rng.below(40));
    const auto got = color_histogram({&a, &b, &c}, bins);
    const auto want = oracle::color_histogram({&a, &b, &c}, bins);
    EXPECT_LE(max_rel_diff(got, want), 1e-12);
    expect_blocks_sum_to_one(got, static_cast<std::size_t>(bins));
  }
}

TEST(ColorMoments, ConstantPlane) {
  const Plane p = constant(5, 5, 0.5);
  const auto m = color_moments(PlaneTriple{&p, &p, &p}, true);
  ASSERT_EQ(m.size(), 12u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(m[static_cast<std::size_t>(4 * c)], 0.5);
    EXPECT_EQ(m[static_cast<std::size_t>(4 * c + 1)], 0.0);
    EXPECT_EQ(m[static_cast<std::size_t>(4 * c + 2)], 0.0);
    EXPECT_EQ(m[static_cast<std::size_t>(4 * c + 3)], 0.0);
  }
}

TEST(ColorMoments, TwoPointDistribution) {
  const Plane p = half_split(10, 4);
  const auto m = color_moments(PlaneTriple{&p, &p, &p}, true);
  EXPECT_NEAR(m[0], 0.5, 1e-15);
  EXPECT_NEAR(m[1], 0.5, 1e-15);
  EXPECT_NEAR(m[2], 0.0, 1e-12);
  EXPECT_NEAR(m[3], -2.0, 1e-12);
}

TEST(ColorMoments, OrderOneIsPrefix) {
  Rng rng(4);
  const Plane a = random_plane(rng, 7, 7), b = random_plane(rng, 7, 7), c = random_plane(rng, 7, 7);
  const auto m1 = color_moments(PlaneTriple{&a, &b, &c}, false);
  const auto m2 = color_moments(PlaneTriple{&a, &b, &c}, true);
  ASSERT_EQ(m1.size(), 6u);
  for (int ch = 0; ch < 3; ++ch) {
    EXPECT_EQ(m1[static_cast<std::size_t>(2 * ch)], m2[static_cast<std::size_t>(4 * ch)]);
    EXPECT_EQ(m1[static_cast<std::size_t>(2 * ch + 1)], m2[static_cast<std::size_t>(4 * ch + 1)]);
  }
}

TEST(ColorMoments, RandomMatchesOracle) {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const Plane a = random_plane(rng, 11, 13), b = random_plane(rng, 11, 13), c = random_plane(rng, 11, 13);
    const auto got = color_moments(PlaneTriple{&a, &b, &c}, true);
    std::vector<double> want;
    for (const Plane* p : {&a, &b, &c}) {
      const auto m = oracle::moments(p->data, true);
      want.insert(want.end(), m.begin(), m.end());
    }
    EXPECT_LE(max_rel_diff(got, want, 1e-9), 1e-9);
  }
}

TEST(ColorMoments, RawSpansAcceptUnboundedValues) {
  std::vector<double> l = {10, 20, 30, 40}, a = {-50, 50, -50, 50}, b = {1, 1, 1, 1};
  const auto m = color_moments({std::span<const double>(l), std::span<const double>(a), std::span<const double>(b)}, false);
  EXPECT_DOUBLE_EQ(m[0], 25.0);
  EXPECT_DOUBLE_EQ(m[1], std::sqrt(125.0));
  EXPECT_DOUBLE_EQ(m[2], 0.0);
  EXPECT_DOUBLE_EQ(m[3], 50.0);
  EXPECT_DOUBLE_EQ(m[5], 0.0);
}

TEST(LocalHistogram, ConstantImage) {
  const Plane p = constant(8, 8, 0.7);
  const auto h = local_color_histogram({&p, &p, &p}, 2, 8);
  ASSERT_EQ(h.size(), 96u);
  for (std::size_t blk = 0; blk < 12; ++blk)
    for (std::size_t b = 0; b < 8; ++b) EXPECT_EQ(h[blk * 8 + b], b == 5 ? 1.0 : 0.0);
}

TEST(LocalHistogram, LeftRightSeparation) {
  const Plane p = half_split(8, 8);
  const auto h = local_color_histogram({&p, &p, &p}, 2, 8);
  for (int gy = 0; gy < 2; ++gy)
    for (int gx = 0; gx < 2; ++gx)
      for (int c = 0; c < 3; ++c) {
        const std::size_t base = static_cast<std::size_t>(((gy * 2 + gx) * 3 + c) * 8);
        EXPECT_EQ(h[base + (gx == 0 ? 0 : 7)], 1.0);
      }
}

TEST(LocalHistogram, RandomMatchesCellOracle) {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const int w = 5 + static_cast<int>(rng.below(20)), hgt = 5 + static_cast<int>(rng.below(20));
    const Plane a = random_plane(rng, w, hgt), b = random_plane(rng, w, hgt), c = random_plane(rng, w, hgt);
    const auto got = local_color_histogram({&a, &b, &c}, 4, 8);
    EXPECT_LE(max_rel_diff(got, oracle::lch({&a, &b, &c}, 4, 8)), 1e-12) << w << "x" << hgt;
    expect_blocks_sum_to_one(got, 8);
  }
}

TEST(Cooccurrence, ConstantPlane) {
  const Plane p = constant(6, 6, 0.2);
  const auto v = color_cooccurrence({&p, &p, &p}, 8, {{1, 0}, {0, 1}});
  ASSERT_EQ(v.size(), 30u);
  for (std::size_t i = 0; i < v.size(); i += 5) {
    EXPECT_EQ(v[i + 0], 0.0);  // contrast
    EXPECT_EQ(v[i + 2], 1.0);  // energy
    EXPECT_EQ(v[i + 4], 0.0);  // entropy
  }
}

TEST(Cooccurrence, HandCountedTwoByTwo) {
  const Plane p = plane_from(2, 2, {0.0, 1.0, 0.0, 1.0});
  const auto m = cooccurrence(p, 2, {1, 0});
  EXPECT_EQ(m(0, 1) + m(1, 0), 1.0);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(1, 1), 0.0);
  EXPECT_EQ(haralick(m).contrast, 1.0);
}

TEST(Cooccurrence, RandomMatchesPairCounting) {
  Rng rng(14);
  for (int t = 0; t < 10; ++t) {
    const Plane p = random_plane(rng, 9, 12);
    const int levels = 2 + static_cast<int>(rng.below(9));
    const int dx = static_cast<int>(rng.below(5)) - 2, dy = static_cast<int>(rng.below(3));
    if (dx == 0 && dy == 0) continue;
    const auto m = cooccurrence(p, levels, {dx, dy});
    const auto o = oracle::cooccurrence(p, levels, dx, dy);
    double sum = 0;
    for (int i = 0; i < levels; ++i)
      for (int j = 0; j < levels; ++j) {
        EXPECT_NEAR(m(i, j), o[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 1e-15);
        EXPECT_EQ(m(i, j), m(j, i));
        sum += m(i, j);
      }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Cooccurrence, FeaturesMatchOracle) {
  Rng rng(15);
  const std::vector<Offset> offs = {{1, 0}, {0, 1}};
  for (int t = 0; t < 10; ++t) {
    const Plane a = random_plane(rng, 16, 16), b = random_plane(rng, 16, 16), c = random_plane(rng, 16, 16);
    const auto got = color_cooccurrence({&a, &b, &c}, 8, offs);
    std::vector<double> want;
    for (const Plane* p : {&a, &b, &c}) {
      const auto g = oracle::glcm(*p, 8, {{1, 0}, {0, 1}});
      want.insert(want.end(), g.begin(), g.end());
    }
    EXPECT_LE(max_rel_diff(got, want, 1e-12), 1e-9);
  }
}

TEST(ColorProperty, PermutationInvarianceOfChAndCm) {
  Rng rng(16);
  for (int t = 0; t < 20; ++t) {
    const Plane a = random_plane(rng, 8, 8), b = random_plane(rng, 8, 8), c = random_plane(rng, 8, 8);
    std::vector<std::size_t> perm = iota(64);
    rng.shuffle(perm);
    Plane pa = a, pb = b, pc = c;
    for (std::size_t i = 0; i < 64; ++i) {
      pa.data[i] = a.data[perm[i]];
      pb.data[i] = b.data[perm[i]];
      pc.data[i] = c.data[perm[i]];
    }
    EXPECT_EQ(color_histogram({&a, &b, &c}, 32), color_histogram({&pa, &pb, &pc}, 32));
    EXPECT_LE(max_rel_diff(color_moments(PlaneTriple{&a, &b, &c}, true), color_moments(PlaneTriple{&pa, &pb, &pc}, true), 1e-9), 1e-9);
  }
}

TEST(ColorProperty, LchAndCcmArePositionSensitive) {
  const Plane p = half_split(8, 8);
  const Plane t = transposed(p);
  EXPECT_NE(local_color_histogram({&p, &p, &p}, 2, 8), local_color_histogram({&t, &t, &t}, 2, 8));
  EXPECT_NE(color_cooccurrence({&p, &p, &p}, 8, {{1, 0}}), color_cooccurrence({&t, &t, &t}, 8, {{1, 0}}));
}

TEST(ColorProperty, OutputsFinite) {
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    Plane a = random_plane(rng, 6, 6);
    if (t % 3 == 0) a = constant(6, 6, rng.uniform());
    for (double v : color_cooccurrence({&a, &a, &a}, 8, {{1, 0}, {0, 1}})) EXPECT_TRUE(std::isfinite(v));
    for (double v : color_moments(PlaneTriple{&a, &a, &a}, true)) EXPECT_TRUE(std::isfinite(v));
  }
}
