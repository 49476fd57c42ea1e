#pragma once
// Directory-per-class dataset ingestion, the manifest file, and stratified
// train/test and k-fold splitting.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "avivis/common.hpp"
#include "avivis/image.hpp"

namespace avivis {

struct ClassLabel {
  std::string name;
  int index = 0;
};

struct ImageRecord {
  std::filesystem::path path;  // resolved location on disk
  ClassLabel label;
  std::size_t manifest_index = 0;
  int width = 0;   // post-resize
  int height = 0;  // post-resize
};

struct Manifest {
  std::vector<ImageRecord> records;
  std::vector<std::string> class_names;   // index order
  std::vector<std::size_t> class_counts;  // by class index
  int resize_w = 128;
  int resize_h = 128;
  std::vector<std::string> warnings;

  std::size_t size() const { return records.size(); }
  std::size_t num_classes() const { return class_names.size(); }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label.index);
    return out;
  }

  /// Identity of the ordered record list: class, file name, position, and
  /// resize dims. Independent of where the dataset lives on disk.
  std::uint64_t fingerprint() const {
    Fnv1a h;
    h.update("avivis-manifest-v1");
    h.update_u64(static_cast<std::uint64_t>(resize_w));
    h.update_u64(static_cast<std::uint64_t>(resize_h));
    for (const auto& r : records) {
      h.update_u64(r.manifest_index);
      h.update(r.label.name);
      h.update(r.path.filename().string());
    }
    return h.digest();
  }
};

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline void finalize_manifest(Manifest& m) {
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < m.class_names.size(); ++i) index_of[m.class_names[i]] = static_cast<int>(i);
  m.class_counts.assign(m.class_names.size(), 0);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    auto& r = m.records[i];
    r.manifest_index = i;
    r.label.index = index_of.at(r.label.name);
    r.width = m.resize_w;
    r.height = m.resize_h;
    ++m.class_counts[static_cast<std::size_t>(r.label.index)];
  }
}

}  // namespace detail

/// Scans one or more dataset roots. Class directories with the same name in
/// different roots are merged. Unreadable images are skipped and reported in
/// Manifest::warnings.
inline Manifest scan_dataset(const std::vector<std::filesystem::path>& roots, int resize_w,
                             int resize_h, std::size_t jobs = 1) {
  namespace fs = std::filesystem;
  if (roots.empty()) throw UsageError("no dataset root given");
  if (resize_w <= 0 || resize_h <= 0) throw UsageError("resize dims must be positive");

  struct Candidate {
    std::string class_name;
    std::string file_name;
    std::size_t root_index;
    fs::path path;
  };
  std::vector<Candidate> candidates;
  std::map<std::string, std::size_t> seen_classes;
  for (std::size_t ri = 0; ri < roots.size(); ++ri) {
    const auto& root = roots[ri];
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
    for (const auto& entry : fs::directory_iterator(root)) {
      if (!entry.is_directory()) continue;
      const std::string cls = entry.path().filename().string();
      if (cls.empty() || cls[0] == '.') continue;
      seen_classes.emplace(cls, 0);
      for (const auto& f : fs::directory_iterator(entry.path())) {
        if (!f.is_regular_file() || !detail::has_image_extension(f.path())) continue;
        const std::string fname = f.path().filename().string();
        if (fname[0] == '.') continue;
        candidates.push_back({cls, fname, ri, f.path()});
      }
    }
  }
  if (seen_classes.empty()) throw DataError("dataset root contains no class directories");

  // Byte-wise ordering: class, file name, then root position.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.class_name != b.class_name) return a.class_name < b.class_name;
    if (a.file_name != b.file_name) return a.file_name < b.file_name;
    return a.root_index < b.root_index;
  });

  std::vector<std::string> errors(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    try {
      (void)decode_image(candidates[i].path);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  Manifest m;
  m.resize_w = resize_w;
  m.resize_h = resize_h;
  for (const auto& [cls, unused] : seen_classes) m.class_names.push_back(cls);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!errors[i].empty()) {
      m.warnings.push_back("skipped: " + errors[i]);
      continue;
    }
    ImageRecord r;
    r.path = candidates[i].path;
    r.label.name = candidates[i].class_name;
    m.records.push_back(std::move(r));
  }
  detail::finalize_manifest(m);
  for (std::size_t c = 0; c < m.class_names.size(); ++c) {
    if (m.class_counts[c] == 0) {
      throw DataError("class '" + m.class_names[c] + "' has no decodable images");
    }
  }
  return m;
}

inline Manifest scan_dataset(const std::filesystem::path& root, int resize_w, int resize_h,
                             std::size_t jobs = 1) {
  return scan_dataset(std::vector<std::filesystem::path>{root}, resize_w, resize_h, jobs);
}

/// Decodes a record's file and resizes it to the manifest dims.
inline RasterRGB load_image(const ImageRecord& record) {
  return resize_bilinear(decode_image(record.path), record.width, record.height);
}

// Manifest file: a header line, then one tab-separated line per record:
// index, class, path relative to the manifest's directory, width, height.
inline constexpr const char* kManifestMagic = "#avivis-manifest";
inline constexpr int kManifestVersion = 1;

inline void save_manifest(const Manifest& m, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  const fs::path base = fs::absolute(out).parent_path();
  std::ostringstream os;
  os << kManifestMagic << "\tv" << kManifestVersion << "\tresize=" << m.resize_w << "x"
     << m.resize_h << "\tclasses=";
  for (std::size_t i = 0; i < m.class_names.size(); ++i) os << (i ? "," : "") << m.class_names[i];
  os << "\n";
  for (const auto& r : m.records) {
    const fs::path rel = fs::relative(fs::absolute(r.path), base);
    os << r.manifest_index << '\t' << r.label.name << '\t' << rel.generic_string() << '\t'
       << r.width << '\t' << r.height << '\n';
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw DataError("cannot write manifest " + out.string());
  f << os.str();
}

inline Manifest load_manifest(const std::filesystem::path& in) {
  namespace fs = std::filesystem;
  std::ifstream f(in, std::ios::binary);
  if (!f) throw DataError("cannot open manifest " + in.string());
  const fs::path base = fs::absolute(in).parent_path();
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty manifest " + in.string());
  std::vector<std::string> fields;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, '\t')) fields.push_back(tok);
  }
  if (fields.size() < 4 || fields[0] != kManifestMagic) throw DataError("not a manifest: " + in.string());
  if (fields[1] != "v" + std::to_string(kManifestVersion)) {
    throw DataError("unsupported manifest version " + fields[1]);
  }
  Manifest m;
  if (std::sscanf(fields[2].c_str(), "resize=%dx%d", &m.resize_w, &m.resize_h) != 2) {
    throw DataError("bad manifest resize field");
  }
  {
    std::stringstream ss(fields[3].substr(fields[3].find('=') + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) m.class_names.push_back(tok);
  }
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx, cls, rel, w, h;
    if (!std::getline(ss, idx, '\t') || !std::getline(ss, cls, '\t') || !std::getline(ss, rel, '\t') ||
        !std::getline(ss, w, '\t') || !std::getline(ss, h, '\t')) {
      throw DataError("malformed manifest line: " + line);
    }
    if (std::stoul(idx) != m.records.size()) throw DataError("manifest indices not dense");
    ImageRecord r;
    r.path = (base / rel).lexically_normal();
    r.label.name = cls;
    m.records.push_back(std::move(r));
  }
  for (const auto& r : m.records) {
    if (std::find(m.class_names.begin(), m.class_names.end(), r.label.name) == m.class_names.end()) {
      throw DataError("manifest record has unknown class " + r.label.name);
    }
  }
  detail::finalize_manifest(m);
  return m;
}

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 44;
  double test_fraction = 0.2;
};

inline std::size_t count_classes(std::span<const int> labels) {
  int mx = -1;
  for (int l : labels) {
    if (l < 0) throw DataError("negative class label");
    mx = std::max(mx, l);
  }
  return static_cast<std::size_t>(mx + 1);
}

namespace detail {

inline std::vector<std::vector<std::size_t>> indices_by_class(std::span<const int> labels,
                                                              std::span<const std::size_t> subset) {
  std::vector<std::vector<std::size_t>> by_class(count_classes(labels));
  for (std::size_t i : subset) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  return by_class;
}

}  // namespace detail

/// Stratified partition of `subset` (indices into labels). Per class,
/// round(count * fraction) members go to test. No size preconditions.
inline DataSplit stratified_partition(std::span<const int> labels, std::span<const std::size_t> subset,
                                      double test_fraction, std::uint64_t seed) {
  DataSplit s;
  s.seed = seed;
  s.test_fraction = test_fraction;
  Rng rng(derive_seed(seed, "split"));
  for (auto& members : detail::indices_by_class(labels, subset)) {
    rng.shuffle(members);
    const auto n_test = static_cast<std::size_t>(std::llround(members.size() * test_fraction));
    s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline DataSplit split_train_test(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test fraction must lie in (0, 1)");
  }
  const std::size_t c = count_classes(labels);
  if (static_cast<double>(labels.size()) < static_cast<double>(c) / test_fraction) {
    throw DataError("too few samples for a stratified split");
  }
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return stratified_partition(labels, all, test_fraction, seed);
}

inline DataSplit split_train_test(const Manifest& m, double test_fraction, std::uint64_t seed) {
  const auto labels = m.labels();
  return split_train_test(labels, test_fraction, seed);
}

/// Stratified k folds. Members of each class are shuffled and dealt round
/// robin; the dealing position carries over between classes so fold sizes
/// stay balanced.
inline std::vector<DataSplit> kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("kfold needs k >= 2");
  auto by_class = [&] {
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return detail::indices_by_class(labels, all);
  }();
  for (const auto& members : by_class) {
    if (!members.empty() && members.size() < k) throw DataError("k exceeds the smallest class count");
  }
  Rng rng(derive_seed(seed, "kfold"));
  std::vector<std::vector<std::size_t>> fold_test(k);
  std::size_t pos = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t i : members) fold_test[pos++ % k].push_back(i);
  }
  std::vector<DataSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    folds[f].seed = seed;
    folds[f].test_fraction = 1.0 / static_cast<double>(k);
    folds[f].test = fold_test[f];
    std::sort(folds[f].test.begin(), folds[f].test.end());
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), fold_test[g].begin(), fold_test[g].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

inline std::vector<DataSplit> kfold(const Manifest& m, std::size_t k, std::uint64_t seed) {
  const auto labels = m.labels();
  return kfold(labels, k, seed);
}

}  // namespace avivis
