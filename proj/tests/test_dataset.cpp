#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace avivis;
using namespace testsupport;

namespace {

void write_solid(const fs::path& p, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RasterRGB img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, r, g, b);
  fs::create_directories(p.parent_path());
  write_png(p, img);
}

std::vector<int> labels_with_counts(const std::vector<std::size_t>& counts) {
  std::vector<int> out;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t i = 0; i < counts[c]; ++i) out.push_back(static_cast<int>(c));
  return out;
}

void expect_partition(const DataSplit& s, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (auto i : s.train) ++seen.at(i);
  for (auto i : s.test) ++seen.at(i);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen[i], 1) << "index " << i;
}

}  // namespace

TEST(ScanDataset, SingleClassSingleImage) {
  TempDir d;
  write_solid(d / "only/a.png", 4, 4, 1, 2, 3);
  const Manifest m = scan_dataset(d.path(), 8, 8);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.class_counts, std::vector<std::size_t>{1});
  EXPECT_EQ(m.class_names, std::vector<std::string>{"only"});
}

TEST(ScanDataset, SyntheticSetOrderedAndCounted) {
  TempDir d;
  ASSERT_EQ(write_synth_dataset(d.path(), 25, 7, 32, 1), 100u);
  const Manifest m = scan_dataset(d.path(), 32, 32);
  ASSERT_EQ(m.size(), 100u);
  EXPECT_EQ(m.class_names, (std::vector<std::string>{"cocci", "healthy", "ncd", "salmo"}));
  EXPECT_EQ(m.class_counts, (std::vector<std::size_t>{25, 25, 25, 25}));
  // Directory listing order: class then file name.
  std::vector<std::pair<std::string, std::string>> listing;
  for (const auto& c : fs::directory_iterator(d.path()))
    for (const auto& f : fs::directory_iterator(c.path())) listing.emplace_back(c.path().filename(), f.path().filename());
  std::sort(listing.begin(), listing.end());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m.records[i].manifest_index, i);
    EXPECT_EQ(m.records[i].label.name, listing[i].first);
    EXPECT_EQ(m.records[i].path.filename().string(), listing[i].second);
  }
}

TEST(ScanDataset, CountsMatchDirectoryContents) {
  TempDir d;
  const std::vector<std::pair<std::string, int>> layout = {{"b", 3}, {"a", 5}, {"c", 1}};
  for (const auto& [cls, n] : layout)
    for (int i = 0; i < n; ++i) write_solid(d / (cls + "/" + std::to_string(i) + ".png"), 3, 3, 0, 0, 0);
  const Manifest m = scan_dataset(d.path(), 8, 8);
  EXPECT_EQ(m.class_names, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(m.class_counts, (std::vector<std::size_t>{5, 3, 1}));
  std::size_t sum = 0;
  for (auto c : m.class_counts) sum += c;
  EXPECT_EQ(sum, m.size());
}

TEST(ScanDataset, UnreadableFilesBecomeWarnings) {
  TempDir d;
  write_solid(d / "a/good.png", 3, 3, 9, 9, 9);
  std::ofstream(d / "a/bad.png") << "not an image";
  const Manifest m = scan_dataset(d.path(), 8, 8);
  EXPECT_EQ(m.size(), 1u);
  ASSERT_EQ(m.warnings.size(), 1u);
}

TEST(ScanDataset, EmptyRootIsFatal) {
  TempDir d;
  EXPECT_THROW(scan_dataset(d.path(), 8, 8), DataError);
}

TEST(ScanDataset, ClassWithoutDecodableImagesIsFatal) {
  TempDir d;
  write_solid(d / "a/x.png", 3, 3, 0, 0, 0);
  fs::create_directories(d / "empty");
  EXPECT_THROW(scan_dataset(d.path(), 8, 8), DataError);
}

TEST(ScanDataset, MultipleRootsMerge) {
  TempDir a, b;
  write_solid(a / "x/1.png", 3, 3, 0, 0, 0);
  write_solid(b / "x/1.png", 3, 3, 0, 0, 0);
  write_solid(b / "y/2.png", 3, 3, 0, 0, 0);
  const Manifest m = scan_dataset(std::vector<fs::path>{a.path(), b.path()}, 8, 8);
  EXPECT_EQ(m.class_counts, (std::vector<std::size_t>{2, 1}));
}

TEST(ScanDataset, ManifestRoundTrip) {
  TempDir d;
  write_synth_dataset(d / "data", 3, 1, 16, 1);
  const Manifest m = scan_dataset(d / "data", 20, 24);
  save_manifest(m, d / "m.tsv");
  const Manifest back = load_manifest(d / "m.tsv");
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  EXPECT_EQ(back.class_counts, m.class_counts);
  EXPECT_EQ(back.resize_w, 20);
  EXPECT_EQ(back.resize_h, 24);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(back.records[i].path, m.records[i].path);
}

TEST(LoadImage, IdentityOnOnePixel) {
  TempDir d;
  write_solid(d / "c/red.png", 1, 1, 255, 0, 0);
  const Manifest m = scan_dataset(d.path(), 1, 1);
  const RasterRGB img = load_image(m.records[0]);
  ASSERT_EQ(img.width, 1);
  EXPECT_EQ(img.data, (std::vector<std::uint8_t>{255, 0, 0}));
}

TEST(LoadImage, CheckerboardAveragesToMidGray) {
  RasterRGB img(2, 2);
  img.set(0, 0, 0, 0, 0);
  img.set(1, 1, 0, 0, 0);
  img.set(1, 0, 255, 255, 255);
  img.set(0, 1, 255, 255, 255);
  const RasterRGB out = resize_bilinear(img, 1, 1);
  for (auto v : out.data) {
    EXPECT_GE(v, 127);
    EXPECT_LE(v, 128);
  }
}

TEST(LoadImage, GradientCornersPreserved) {
  RasterRGB img(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      img.set(x, y, static_cast<std::uint8_t>(x * 4), static_cast<std::uint8_t>(y * 4), static_cast<std::uint8_t>((x + y) * 2));
  const RasterRGB out = resize_bilinear(img, 32, 32);
  for (auto [ix, iy, ox, oy] : std::vector<std::array<int, 4>>{{0, 0, 0, 0}, {63, 0, 31, 0}, {0, 63, 0, 31}, {63, 63, 31, 31}}) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(ox, oy)[c], img.at(ix, iy)[c], 1) << ix << "," << iy;
  }
}

TEST(LoadImage, RandomBilinearMatchesOracle) {
  Rng rng(3);
  const RasterRGB src = random_raster(rng, 13, 9);
  const RasterRGB out = resize_bilinear(src, 7, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) {
      const double sx = x * 12.0 / 6.0, sy = y * 8.0 / 4.0;
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, 12), y1 = std::min(y0 + 1, 8);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - fx) * (1 - fy) * src.at(x0, y0)[c] + fx * (1 - fy) * src.at(x1, y0)[c] +
                         (1 - fx) * fy * src.at(x0, y1)[c] + fx * fy * src.at(x1, y1)[c];
        EXPECT_NEAR(out.at(x, y)[c], v, 0.5 + 1e-9);
      }
    }
}

TEST(Split, HundredItems) {
  const auto labels = labels_with_counts({25, 25, 25, 25});
  const DataSplit s = split_train_test(labels, 0.2, 44);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.test.size(), 20u);
  expect_partition(s, 100);
}

TEST(Split, FullDatasetTestSize) {
  const auto labels = labels_with_counts({2476, 2404, 562, 2625});
  const DataSplit s = split_train_test(labels, 0.2, 44);
  EXPECT_TRUE(s.test.size() == 1613 || s.test.size() == 1614) << s.test.size();
  expect_partition(s, 8067);
}

TEST(Split, Deterministic) {
  const auto labels = labels_with_counts({10, 17, 4});
  const DataSplit a = split_train_test(labels, 0.3, 9), b = split_train_test(labels, 0.3, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const DataSplit c = split_train_test(labels, 0.3, 10);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, FractionOutOfRange) {
  const auto labels = labels_with_counts({10, 10});
  EXPECT_THROW(split_train_test(labels, 0.0, 1), UsageError);
  EXPECT_THROW(split_train_test(labels, 1.0, 1), UsageError);
  EXPECT_THROW(split_train_test(labels, -0.5, 1), UsageError);
}

TEST(Split, TooFewSamples) {
  const auto labels = labels_with_counts({2, 2, 2});
  EXPECT_THROW(split_train_test(labels, 0.2, 1), DataError);
}

TEST(SplitProperty, StratificationBound) {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 1 + rng.below(6);
    std::vector<std::size_t> counts;
    for (std::size_t c = 0; c < classes; ++c) counts.push_back(1 + rng.below(60));
    auto labels = labels_with_counts(counts);
    rng.shuffle(labels);
    const double frac = rng.uniform(0.05, 0.95);
    if (labels.size() < classes / frac) continue;
    const DataSplit s = split_train_test(labels, frac, rng.below(1000));
    expect_partition(s, labels.size());
    std::vector<double> in_test(classes, 0);
    for (auto i : s.test) in_test[static_cast<std::size_t>(labels[i])] += 1;
    for (std::size_t c = 0; c < classes; ++c)
      EXPECT_LE(std::abs(in_test[c] / counts[c] - frac), 1.0 / counts[c] + 1e-12);
  }
}

TEST(Kfold, TenItemsFiveFolds) {
  const auto labels = labels_with_counts({10});
  const auto folds = kfold(labels, 5, 44);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> all;
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 2u);
    expect_partition(f, 10);
    all.insert(f.test.begin(), f.test.end());
  }
  EXPECT_EQ(all.size(), 10u);
}

TEST(Kfold, SyntheticPerClassCounts) {
  TempDir d;
  write_synth_dataset(d.path(), 25, 44, 16, 1);
  const Manifest m = scan_dataset(d.path(), 16, 16);
  const auto folds = kfold(m, 5, 44);
  const auto labels = m.labels();
  for (const auto& f : folds) {
    std::vector<int> per(4, 0);
    for (auto i : f.test) ++per[static_cast<std::size_t>(labels[i])];
    EXPECT_EQ(per, (std::vector<int>{5, 5, 5, 5}));
  }
}

TEST(Kfold, DeterministicAndValidated) {
  const auto labels = labels_with_counts({7, 9});
  const auto a = kfold(labels, 3, 5), b = kfold(labels, 3, 5);
  for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(a[f].test, b[f].test);
  EXPECT_THROW(kfold(labels, 1, 5), UsageError);
  EXPECT_THROW(kfold(labels, 8, 5), DataError);
}

TEST(KfoldProperty, EveryIndexInExactlyOneTestFold) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    std::vector<std::size_t> counts;
    for (std::size_t c = 0, n = 1 + rng.below(4); c < n; ++c) counts.push_back(k + rng.below(30));
    auto labels = labels_with_counts(counts);
    rng.shuffle(labels);
    const auto folds = kfold(labels, k, trial);
    std::vector<int> hits(labels.size(), 0);
    for (const auto& f : folds) {
      expect_partition(f, labels.size());
      for (auto i : f.test) ++hits[i];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}
