#pragma once
// Generators and fixtures shared by the test binaries.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "avivis/avivis.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace avivis;

inline Plane random_plane(Rng& rng, int w, int h, ChannelId c = ChannelId::Gray) {
  Plane p(w, h, c);
  for (auto& v : p.data) v = rng.uniform();
  return p;
}

inline RasterRGB random_raster(Rng& rng, int w, int h) {
  RasterRGB img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

inline Plane plane_from(int w, int h, const std::vector<double>& v) {
  Plane p(w, h);
  p.data = v;
  return p;
}

/// |a - b| <= tol * max(|a|, |b|) + abs_floor.
inline bool near_rel(double a, double b, double tol, double abs_floor = 1e-12) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

/// Isotropic Gaussian clusters, one per class, centres spread on a simplex.
inline FeatureMatrix make_blobs(std::size_t per_class, std::size_t classes, std::size_t dim, double sigma,
                                std::uint64_t seed, double spread = 1.0) {
  Rng rng(seed);
  std::vector<std::vector<double>> centres(classes, std::vector<double>(dim));
  for (auto& c : centres)
    for (auto& v : c) v = spread * rng.normal();
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t i = 0; i < per_class * classes; ++i) {
    const std::size_t k = i % classes;
    for (std::size_t d = 0; d < dim; ++d) values.push_back(centres[k][d] + sigma * rng.normal());
    labels.push_back(static_cast<int>(k));
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < classes; ++k) names.push_back("c" + std::to_string(k));
  return make_matrix(per_class * classes, dim, std::move(values), std::move(labels), std::move(names));
}

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "avivis") {
    std::string tmpl = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Every regular file under `dir` (relative path -> bytes), skipping names in `skip`.
inline std::map<std::string, std::string> snapshot(const fs::path& dir, const std::vector<std::string>& skip = {"run.log"}) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return out;
}

}  // namespace testsupport
