#pragma once
// Versioned container used for models and pipeline artifacts: a JSON header
// describing structure, followed by named little-endian float64 arrays.
//
//   8 bytes  magic "AVVBLOB\0"
//   u32      format version
//   u64      header length
//   ...      JSON header {"kind", "meta", "arrays": [[name, length], ...]}
//   ...      arrays in header order, f64 little-endian

#include <bit>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "avivis/featstore.hpp"

namespace avivis {

inline constexpr char kBlobMagic[8] = {'A', 'V', 'V', 'B', 'L', 'O', 'B', '\0'};
inline constexpr std::uint32_t kBlobVersion = 1;

struct Blob {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, std::vector<double>> arrays;

  const std::vector<double>& array(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw DataError("missing array '" + name + "' in " + kind);
    return it->second;
  }
};

inline std::string serialize_blob(const Blob& b) {
  nlohmann::json listing = nlohmann::json::array();
  for (const auto& [name, values] : b.arrays) listing.push_back({name, values.size()});
  const std::string h = nlohmann::json{{"kind", b.kind}, {"meta", b.meta}, {"arrays", listing}}.dump();
  std::string out(kBlobMagic, 8);
  detail::put_le(out, kBlobVersion, 4);
  detail::put_le(out, h.size(), 8);
  out += h;
  for (const auto& [name, values] : b.arrays)
    for (double v : values) detail::put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

inline Blob parse_blob(const std::vector<unsigned char>& bytes, const std::string& what) {
  auto fail = [&](const std::string& why) { return DataError(what + ": " + why); };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kBlobMagic, 8) != 0) throw fail("bad magic");
  const auto version = detail::get_le(bytes.data() + 8, 4);
  if (version != kBlobVersion) throw fail("unsupported version " + std::to_string(version));
  const auto hlen = detail::get_le(bytes.data() + 12, 8);
  if (hlen > bytes.size() - 20) throw fail("truncated header");
  Blob b;
  std::vector<std::pair<std::string, std::size_t>> listing;
  try {
    const auto h = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(hlen));
    b.kind = h.at("kind").get<std::string>();
    b.meta = h.at("meta");
    for (const auto& a : h.at("arrays")) listing.emplace_back(a.at(0).get<std::string>(), a.at(1).get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  std::size_t need = 20 + hlen;
  for (const auto& [name, len] : listing) need += 8 * len;
  if (bytes.size() != need) throw fail(bytes.size() < need ? "truncated payload" : "trailing bytes");
  const unsigned char* p = bytes.data() + 20 + hlen;
  for (const auto& [name, len] : listing) {
    std::vector<double> v(len);
    for (auto& x : v) {
      x = std::bit_cast<double>(detail::get_le(p, 8));
      p += 8;
    }
    b.arrays.emplace(name, std::move(v));
  }
  return b;
}

inline void save_blob(const Blob& b, const std::filesystem::path& path) {
  detail::write_bytes(path, serialize_blob(b));
}

inline Blob load_blob(const std::filesystem::path& path) {
  return parse_blob(detail::read_file_bytes(path), path.string());
}

}  // namespace avivis
