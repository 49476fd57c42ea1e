#pragma once
// FeatureMatrix with its group schema, parallel assembly from a manifest, and
// the on-disk feature cache.
//
// Cache layout (all integers little-endian):
//   8 bytes   magic "AVVFEAT\0"
//   u32       format version
//   u64       header length in bytes
//   ...       JSON header: rows, cols, schema, class_names, fingerprints, params
//   rows x i32     labels
//   rows x cols x f32   values, row-major

#include <bit>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "avivis/dataset.hpp"
#include "avivis/extractors.hpp"

namespace avivis {

struct GroupSpan {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
  friend bool operator==(const GroupSpan&, const GroupSpan&) = default;
};

struct GroupSchema {
  std::vector<GroupSpan> groups;

  std::size_t width() const { return groups.empty() ? 0 : groups.back().offset + groups.back().length; }

  const GroupSpan* find(const std::string& name) const {
    for (const auto& g : groups)
      if (g.name == name) return &g;
    return nullptr;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& g : groups) out.push_back(g.name);
    return out;
  }

  void append(const std::string& name, std::size_t length) {
    if (find(name)) throw UsageError("duplicate feature group " + name);
    groups.push_back({name, width(), length});
  }

  // Contiguous, non-overlapping, starting at 0.
  bool consistent() const {
    std::size_t at = 0;
    for (const auto& g : groups) {
      if (g.offset != at) return false;
      at += g.length;
    }
    return true;
  }

  friend bool operator==(const GroupSchema&, const GroupSchema&) = default;
};

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  GroupSchema schema;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<double> values;  // row-major
  std::uint64_t manifest_fingerprint = 0;
  std::uint64_t params_fingerprint = 0;
  std::string params_json;  // extractor params the matrix was built with, if any

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::size_t num_classes() const { return class_names.size(); }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Builds a matrix with a single-group-per-block schema from raw values.
/// Used by tests and by stages that produce derived matrices.
inline FeatureMatrix make_matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                                 std::vector<int> labels, std::vector<std::string> class_names,
                                 GroupSchema schema = {}) {
  if (values.size() != rows * cols || labels.size() != rows) throw UsageError("matrix shape mismatch");
  if (schema.groups.empty()) schema.append("X", cols);
  if (schema.width() != cols || !schema.consistent()) throw UsageError("schema does not cover columns");
  FeatureMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.schema = std::move(schema);
  m.values = std::move(values);
  m.labels = std::move(labels);
  m.class_names = std::move(class_names);
  return m;
}

/// Narrows to 32-bit precision, the storage precision of the cache.
inline double to_storage_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

/// Extracts the configured groups for in-memory images. Rows follow input
/// order; column blocks follow canonical group order.
inline FeatureMatrix assemble_rasters(std::span<const RasterRGB> images, std::vector<int> labels,
                                      std::vector<std::string> class_names, const std::vector<std::string>& group_names,
                                      const ExtractorParams& params, std::size_t jobs = 1,
                                      const std::vector<std::string>& image_names = {}) {
  params.validate();
  const auto groups = canonical_groups(group_names);
  if (images.empty()) throw DataError("no images to extract");
  const int w = images[0].width, h = images[0].height;
  for (const auto& im : images)
    if (im.width != w || im.height != h) throw DataError("images differ in size; resize first");
  FeatureMatrix m;
  m.rows = images.size();
  for (const auto& g : groups) {
    const std::size_t len = group_width(g, params, w, h);
    if (len == 0) throw DataError("image too small for feature group " + g.name());
    m.schema.append(g.name(), len);
  }
  m.cols = m.schema.width();
  m.values.assign(m.rows * m.cols, 0.0);
  m.labels = std::move(labels);
  m.class_names = std::move(class_names);
  m.params_fingerprint = params_fingerprint(params);
  m.params_json = nlohmann::json(params).dump();
  parallel_for(m.rows, jobs, [&](std::size_t r) {
    const ChannelSet cs = decompose_channels(images[r]);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const auto v = extract_group(groups[gi], cs, params);
      const auto& span = m.schema.groups[gi];
      const std::string who = image_names.empty() ? "image " + std::to_string(r) : image_names[r];
      if (v.size() != span.length) throw NumericError("feature width mismatch for " + span.name + " on " + who);
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k])) throw NumericError("non-finite feature in group " + span.name + " for " + who);
        m.values[r * m.cols + span.offset + k] = to_storage_precision(v[k]);
      }
    }
  });
  return m;
}

/// Loads every manifest image (concurrently) and extracts the groups.
inline FeatureMatrix assemble(const Manifest& manifest, const std::vector<std::string>& group_names,
                              const ExtractorParams& params, std::size_t jobs = 1) {
  if (manifest.size() == 0) throw DataError("empty manifest");
  (void)canonical_groups(group_names);
  std::vector<RasterRGB> images(manifest.size());
  parallel_for(manifest.size(), jobs, [&](std::size_t i) { images[i] = load_image(manifest.records[i]); });
  std::vector<std::string> names;
  names.reserve(manifest.size());
  for (const auto& r : manifest.records) names.push_back(r.path.string());
  FeatureMatrix m = assemble_rasters(images, manifest.labels(), manifest.class_names, group_names, params, jobs, names);
  m.manifest_fingerprint = manifest.fingerprint();
  return m;
}

/// Keeps only the listed groups (in the matrix's existing order).
inline FeatureMatrix keep_groups(const FeatureMatrix& m, const std::vector<std::string>& keep) {
  for (const auto& k : keep)
    if (!m.schema.find(k)) throw UsageError("unknown feature group " + k);
  FeatureMatrix out = m;
  out.schema = {};
  std::vector<std::size_t> cols;
  for (const auto& g : m.schema.groups) {
    if (std::find(keep.begin(), keep.end(), g.name) == keep.end()) continue;
    out.schema.append(g.name, g.length);
    for (std::size_t c = 0; c < g.length; ++c) cols.push_back(g.offset + c);
  }
  if (cols.empty()) throw UsageError("feature matrix would have no columns");
  out.cols = cols.size();
  out.values.assign(out.rows * out.cols, 0.0);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out.values[r * out.cols + c] = m.values[r * m.cols + cols[c]];
  return out;
}

inline FeatureMatrix drop_group(const FeatureMatrix& m, const std::string& group) {
  if (!m.schema.find(group)) throw UsageError("unknown feature group " + group);
  std::vector<std::string> keep;
  for (const auto& g : m.schema.groups)
    if (g.name != group) keep.push_back(g.name);
  if (keep.empty()) throw UsageError("cannot drop the only feature group");
  return keep_groups(m, keep);
}

/// Row subset, preserving schema.
inline FeatureMatrix take_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  FeatureMatrix out = m;
  out.rows = rows.size();
  out.values.resize(out.rows * out.cols);
  out.labels.resize(out.rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(m.values.begin() + static_cast<std::ptrdiff_t>(rows[i] * m.cols), m.cols,
                out.values.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
    out.labels[i] = m.labels[rows[i]];
  }
  return out;
}

// ---------------------------------------------------------------- cache I/O

inline constexpr char kFeatureMagic[8] = {'A', 'V', 'V', 'F', 'E', 'A', 'T', '\0'};
inline constexpr std::uint32_t kFeatureVersion = 1;

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("short write to " + path.string());
}

}  // namespace detail

inline std::string serialize_features(const FeatureMatrix& m) {
  nlohmann::json schema = nlohmann::json::array();
  for (const auto& g : m.schema.groups) schema.push_back({g.name, g.offset, g.length});
  nlohmann::json header{{"rows", m.rows},
                        {"cols", m.cols},
                        {"schema", schema},
                        {"class_names", m.class_names},
                        {"manifest_fingerprint", hex64(m.manifest_fingerprint)},
                        {"params_fingerprint", hex64(m.params_fingerprint)},
                        {"params", m.params_json}};
  const std::string h = header.dump();
  std::string out(kFeatureMagic, 8);
  detail::put_le(out, kFeatureVersion, 4);
  detail::put_le(out, h.size(), 8);
  out += h;
  out.reserve(out.size() + m.rows * 4 + m.values.size() * 4);
  for (int l : m.labels) detail::put_le(out, static_cast<std::uint32_t>(l), 4);
  for (double v : m.values) detail::put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
  return out;
}

inline void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_bytes(path, serialize_features(m));
}

struct FeatureLoad {
  FeatureMatrix matrix;
  std::vector<std::string> warnings;
};

/// Reads a cache. If expected_manifest is non-zero and differs from the
/// stored fingerprint, a warning is returned alongside the matrix.
inline FeatureLoad load_features(const std::filesystem::path& path, std::uint64_t expected_manifest = 0) {
  const auto bytes = detail::read_file_bytes(path);
  auto fail = [&](const std::string& why) { return DataError("feature cache " + path.string() + ": " + why); };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kFeatureMagic, 8) != 0) throw fail("bad magic");
  const auto version = detail::get_le(bytes.data() + 8, 4);
  if (version != kFeatureVersion) throw fail("unsupported version " + std::to_string(version));
  const auto hlen = detail::get_le(bytes.data() + 12, 8);
  if (hlen > bytes.size() - 20) throw fail("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  FeatureLoad out;
  FeatureMatrix& m = out.matrix;
  try {
    m.rows = header.at("rows").get<std::size_t>();
    m.cols = header.at("cols").get<std::size_t>();
    for (const auto& g : header.at("schema"))
      m.schema.groups.push_back({g.at(0).get<std::string>(), g.at(1).get<std::size_t>(), g.at(2).get<std::size_t>()});
    m.class_names = header.at("class_names").get<std::vector<std::string>>();
    m.manifest_fingerprint = std::stoull(header.at("manifest_fingerprint").get<std::string>(), nullptr, 16);
    m.params_fingerprint = std::stoull(header.at("params_fingerprint").get<std::string>(), nullptr, 16);
    m.params_json = header.value("params", std::string());
  } catch (const std::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  if (m.schema.width() != m.cols || !m.schema.consistent()) throw fail("schema does not cover columns");
  const std::size_t need = 20 + hlen + m.rows * 4 + m.rows * m.cols * 4;
  if (bytes.size() != need) throw fail(bytes.size() < need ? "truncated payload" : "trailing bytes");
  const unsigned char* p = bytes.data() + 20 + hlen;
  m.labels.resize(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r, p += 4) {
    m.labels[r] = static_cast<int>(static_cast<std::uint32_t>(detail::get_le(p, 4)));
    if (m.labels[r] < 0 || static_cast<std::size_t>(m.labels[r]) >= m.class_names.size()) throw fail("label out of range");
  }
  m.values.resize(m.rows * m.cols);
  for (auto& v : m.values) {
    v = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(p, 4))));
    p += 4;
  }
  if (expected_manifest != 0 && expected_manifest != m.manifest_fingerprint) {
    out.warnings.push_back("feature cache was built from a different manifest (" + hex64(m.manifest_fingerprint) +
                           " vs " + hex64(expected_manifest) + ")");
  }
  return out;
}

}  // namespace avivis
