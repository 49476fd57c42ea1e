#pragma once
// Leave-one-group-out ablation and the colour-space screening grid.

#include <map>
#include <set>

#include "avivis/pipeline.hpp"

namespace avivis {

struct AblationRow {
  std::string removed_group;  // "none" for the baseline
  double accuracy = 0.0;
  double drop = 0.0;  // baseline accuracy - accuracy; negative means removal helped
};

/// Row 0 is the full matrix; then one row per group in `groups` (all schema
/// groups when empty). Every row runs the same modeling path and split.
inline std::vector<AblationRow> ablate_groups(const FeatureMatrix& m, std::vector<std::string> groups,
                                              const ModelingConfig& cfg) {
  if (m.schema.groups.size() < 2) throw UsageError("ablation needs a matrix with at least two feature groups");
  if (groups.empty()) groups = m.schema.names();
  for (const auto& g : groups)
    if (!m.schema.find(g)) throw UsageError("unknown feature group " + g);
  std::vector<AblationRow> rows(groups.size() + 1);
  ModelingConfig inner = cfg;
  inner.jobs = 1;
  parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    const FeatureMatrix x = i == 0 ? m : drop_group(m, groups[i - 1]);
    rows[i].removed_group = i == 0 ? "none" : groups[i - 1];
    rows[i].accuracy = run_modeling(x, inner).evaluation.report.accuracy;
  });
  for (auto& r : rows) r.drop = rows[0].accuracy - r.accuracy;
  rows[0].drop = 0.0;
  return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s = "removed_group,accuracy,drop_baseline_minus_accuracy\n";
  for (const auto& r : rows) s += r.removed_group + "," + fmt(r.accuracy) + "," + fmt(r.drop) + "\n";
  return s;
}

// ---- screening

struct ScreenCell {
  std::string setting;  // extractor combination, e.g. "LBP+FT+WT"
  std::string space;    // RGB, HSV, LAB or ALL
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted
  double recall = 0.0;
  double f1 = 0.0;
};

inline const std::vector<std::string>& default_screen_settings() {
  static const std::vector<std::string> s = {
      "CH",   "CM1", "CM", "LCH",    "CCM",    "CH+LCH", "CH+CM+LCH+CCM",     "GLCM",    "LBP",   "HOG",    "GF",
      "FT",   "WT",  "LBP+FT", "LBP+WT", "FT+WT", "LBP+FT+WT", "SOBEL", "PREWITT", "CANNY", "CONTOUR", "HARRIS",
      "SOBEL+PREWITT+CANNY"};
  return s;
}

inline const std::vector<std::string>& default_screen_spaces() {
  static const std::vector<std::string> s = {"RGB", "HSV", "LAB", "ALL"};
  return s;
}

inline std::vector<std::string> split_plus(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find('+', start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

/// Group names of one cell; ALL concatenates the three spaces.
inline std::vector<std::string> screen_cell_groups(const std::string& setting, const std::string& space) {
  std::vector<std::string> spaces;
  const std::string sp = upper(space);
  if (sp == "ALL") {
    spaces = {"RGB", "HSV", "LAB"};
  } else {
    if (!parse_space(sp)) throw UsageError("unknown colour space " + space);
    spaces = {sp};
  }
  std::vector<std::string> names;
  for (const auto& e : split_plus(setting)) {
    const auto ex = parse_extractor(e);
    if (!ex) throw UsageError("unknown extractor '" + e + "' in setting " + setting);
    for (const auto& s : spaces) names.push_back(s + "-" + kExtractorNames[static_cast<std::size_t>(*ex)]);
  }
  std::vector<std::string> canon;
  for (const auto& g : canonical_groups(names)) canon.push_back(g.name());
  return canon;
}

inline ModelingConfig screen_config(std::uint64_t seed = 44) {
  ModelingConfig c;
  c.seed = seed;
  c.pca_k = 300;
  c.selector = SelectorMethod::None;
  c.classifier = classifier_config(ModelPreset::MlpScreen);
  return c;
}

/// Groups needed by a whole grid, for one extraction pass.
inline std::vector<std::string> screen_required_groups(const std::vector<std::string>& settings,
                                                       const std::vector<std::string>& spaces) {
  std::set<std::string> all;
  for (const auto& s : settings)
    for (const auto& sp : spaces)
      for (const auto& g : screen_cell_groups(s, sp)) all.insert(g);
  return {all.begin(), all.end()};
}

/// Cells are ordered setting-major, then space, matching the input lists.
inline std::vector<ScreenCell> screen_matrix(const FeatureMatrix& full, const std::vector<std::string>& settings,
                                             const std::vector<std::string>& spaces, const ModelingConfig& cfg) {
  std::vector<ScreenCell> cells;
  for (const auto& s : settings)
    for (const auto& sp : spaces) cells.push_back({s, upper(sp)});
  ModelingConfig inner = cfg;
  inner.jobs = 1;
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    auto& c = cells[i];
    const auto run = run_modeling(keep_groups(full, screen_cell_groups(c.setting, c.space)), inner);
    const auto& r = run.evaluation.report;
    c.accuracy = r.accuracy;
    c.precision = r.weighted.precision;
    c.recall = r.weighted.recall;
    c.f1 = r.weighted.f1;
  });
  return cells;
}

inline std::vector<ScreenCell> screen_grid(const Manifest& manifest, const std::vector<std::string>& settings,
                                           const std::vector<std::string>& spaces, const ExtractorParams& params,
                                           const ModelingConfig& cfg) {
  const auto full = assemble(manifest, screen_required_groups(settings, spaces), params, cfg.jobs);
  return screen_matrix(full, settings, spaces, cfg);
}

inline std::string screen_long_csv(const std::vector<ScreenCell>& cells) {
  std::string s = "setting,space,accuracy,precision,recall,f1\n";
  for (const auto& c : cells)
    s += c.setting + "," + c.space + "," + fmt(c.accuracy) + "," + fmt(c.precision) + "," + fmt(c.recall) + "," +
         fmt(c.f1) + "\n";
  return s;
}

/// Accuracy table: one row per setting, one column per space.
inline std::string screen_table_csv(const std::vector<ScreenCell>& cells) {
  std::vector<std::string> settings, spaces;
  std::map<std::pair<std::string, std::string>, double> acc;
  for (const auto& c : cells) {
    if (std::find(settings.begin(), settings.end(), c.setting) == settings.end()) settings.push_back(c.setting);
    if (std::find(spaces.begin(), spaces.end(), c.space) == spaces.end()) spaces.push_back(c.space);
    acc[{c.setting, c.space}] = c.accuracy;
  }
  std::string s = "setting";
  for (const auto& sp : spaces) s += "," + sp;
  s += "\n";
  for (const auto& st : settings) {
    s += st;
    for (const auto& sp : spaces) {
      auto it = acc.find({st, sp});
      s += "," + (it == acc.end() ? std::string() : fmt(it->second, 4));
    }
    s += "\n";
  }
  return s;
}

}  // namespace avivis
