#pragma once
// PipelineConfig: nested JSON on disk, overridden by environment variables
// and then by command-line flags (which address the same keys).

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "avivis/eval.hpp"
#include "avivis/extractors.hpp"

namespace avivis {

struct PipelineConfig {
  std::vector<std::filesystem::path> roots;
  std::filesystem::path manifest;  // used when no roots are given
  int resize_w = 128;
  int resize_h = 128;
  std::vector<std::string> groups{"LAB-CM", "HSV-LBP", "LAB-LBP"};
  ExtractorParams params;
  ModelingConfig modeling;
  std::vector<std::string> screen_settings = default_screen_settings();
  std::vector<std::string> screen_spaces = default_screen_spaces();
  std::size_t screen_pca_k = 300;
  std::vector<std::string> ablate_groups;  // empty: every group
  std::filesystem::path output_dir = "avivis_out";
  std::size_t jobs = 1;

  void validate() const {
    (void)canonical_groups(groups);
    params.validate();
    modeling.classifier.mlp.validate();
    if (resize_w < 8 || resize_h < 8) throw UsageError("resize must be at least 8x8");
    if (!(modeling.test_fraction > 0.0 && modeling.test_fraction < 1.0)) throw UsageError("test_fraction must lie in (0, 1)");
    if (modeling.select_k == 0) throw UsageError("selector k must be positive");
    if (jobs == 0) throw UsageError("jobs must be positive");
  }

  ModelingConfig screen_modeling() const {
    ModelingConfig c = screen_config(modeling.seed);
    c.test_fraction = modeling.test_fraction;
    c.pca_k = screen_pca_k;
    c.jobs = jobs;
    return c;
  }
};

/// Defaults as a JSON document; also the reference for every accepted key.
inline nlohmann::json config_to_json(const PipelineConfig& c) {
  const auto& m = c.modeling;
  const auto& mlp = m.classifier.mlp;
  std::vector<std::string> roots;
  for (const auto& r : c.roots) roots.push_back(r.string());
  return {
      {"dataset", {{"roots", roots}, {"manifest", c.manifest.string()}, {"resize", {c.resize_w, c.resize_h}}}},
      {"features", {{"groups", c.groups}, {"params", c.params}}},
      {"split", {{"test_fraction", m.test_fraction}}},
      {"seed", m.seed},
      {"pca_k", m.pca_k},
      {"selector",
       {{"method", selector_name(m.selector)},
        {"k", m.select_k},
        {"forest_trees", m.selector_options.forest_trees},
        {"lasso_lambda", m.selector_options.lasso_lambda},
        {"gbdt_rounds", m.selector_options.gbdt.rounds}}},
      {"model",
       {{"preset", preset_name(m.classifier.preset)},
        {"hidden", mlp.hidden},
        {"epochs", mlp.epochs},
        {"batch_size", mlp.batch_size},
        {"patience", mlp.patience},
        {"learning_rate", mlp.learning_rate},
        {"dropout", mlp.dropout},
        {"val_fraction", mlp.val_fraction},
        {"tree_max_depth", m.classifier.tree.max_depth},
        {"tree_min_leaf", m.classifier.tree.min_samples_leaf},
        {"forest_trees", m.classifier.forest.n_trees},
        {"svm_gamma", m.classifier.svm.gamma},
        {"svm_c", m.classifier.svm.C}}},
      {"screen", {{"settings", c.screen_settings}, {"spaces", c.screen_spaces}, {"pca_k", c.screen_pca_k}}},
      {"ablate", {{"groups", c.ablate_groups}}},
      {"output_dir", c.output_dir.string()},
      {"jobs", c.jobs}};
}

namespace detail {

// Rejects keys that the defaults document does not have, so typos surface.
inline void check_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& path) {
  if (!given.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!known.contains(it.key())) throw UsageError("unknown config key " + path + "/" + it.key());
    if (it.key() != "params") check_keys(it.value(), known.at(it.key()), path + "/" + it.key());
  }
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  detail::check_keys(j, config_to_json(c), "");
  try {
    const auto d = j.value("dataset", nlohmann::json::object());
    if (d.contains("roots"))
      for (const auto& r : d.at("roots")) c.roots.emplace_back(r.get<std::string>());
    c.manifest = d.value("manifest", std::string());
    if (d.contains("resize")) {
      c.resize_w = d.at("resize").at(0).get<int>();
      c.resize_h = d.at("resize").at(1).get<int>();
    }
    const auto f = j.value("features", nlohmann::json::object());
    if (f.contains("groups")) c.groups = f.at("groups").get<std::vector<std::string>>();
    if (f.contains("params")) {
      detail::check_keys(f.at("params"), nlohmann::json(ExtractorParams{}), "/features/params");
      c.params = f.at("params").get<ExtractorParams>();
    }
    auto& m = c.modeling;
    if (j.contains("split")) m.test_fraction = j.at("split").value("test_fraction", m.test_fraction);
    m.seed = j.value("seed", m.seed);
    m.pca_k = j.value("pca_k", m.pca_k);
    const auto s = j.value("selector", nlohmann::json::object());
    if (s.contains("method")) m.selector = parse_selector(s.at("method").get<std::string>());
    m.select_k = s.value("k", m.select_k);
    m.selector_options.forest_trees = s.value("forest_trees", m.selector_options.forest_trees);
    m.selector_options.lasso_lambda = s.value("lasso_lambda", m.selector_options.lasso_lambda);
    m.selector_options.gbdt.rounds = s.value("gbdt_rounds", m.selector_options.gbdt.rounds);
    const auto md = j.value("model", nlohmann::json::object());
    if (md.contains("preset")) m.classifier = classifier_config(parse_preset(md.at("preset").get<std::string>()));
    auto& mlp = m.classifier.mlp;
    if (md.contains("hidden")) mlp.hidden = md.at("hidden").get<std::vector<std::size_t>>();
    mlp.epochs = md.value("epochs", mlp.epochs);
    mlp.batch_size = md.value("batch_size", mlp.batch_size);
    mlp.patience = md.value("patience", mlp.patience);
    mlp.learning_rate = md.value("learning_rate", mlp.learning_rate);
    mlp.dropout = md.value("dropout", mlp.dropout);
    mlp.val_fraction = md.value("val_fraction", mlp.val_fraction);
    m.classifier.tree.max_depth = md.value("tree_max_depth", m.classifier.tree.max_depth);
    m.classifier.tree.min_samples_leaf = md.value("tree_min_leaf", m.classifier.tree.min_samples_leaf);
    m.classifier.forest.n_trees = md.value("forest_trees", m.classifier.forest.n_trees);
    m.classifier.svm.gamma = md.value("svm_gamma", m.classifier.svm.gamma);
    m.classifier.svm.C = md.value("svm_c", m.classifier.svm.C);
    const auto sc = j.value("screen", nlohmann::json::object());
    if (sc.contains("settings")) c.screen_settings = sc.at("settings").get<std::vector<std::string>>();
    if (sc.contains("spaces")) c.screen_spaces = sc.at("spaces").get<std::vector<std::string>>();
    c.screen_pca_k = sc.value("pca_k", c.screen_pca_k);
    if (j.contains("ablate")) c.ablate_groups = j.at("ablate").value("groups", c.ablate_groups);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
  c.modeling.jobs = c.jobs;
  c.validate();
  return c;
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw UsageError("cannot read config " + p.string());
  try {
    return nlohmann::json::parse(f, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + p.string() + " is not valid JSON: " + e.what());
  }
}

/// Sets `value` at a '/'-separated key path, creating objects on the way.
inline void set_key(nlohmann::json& j, const std::string& path, nlohmann::json value) {
  j[nlohmann::json::json_pointer(path)] = std::move(value);
}

/// AVIVIS_OUT_DIR and AVIVIS_JOBS, applied between the config file and flags.
inline void apply_env_overrides(nlohmann::json& j) {
  if (const char* out = std::getenv("AVIVIS_OUT_DIR"); out && *out) set_key(j, "/output_dir", out);
  if (const char* jobs = std::getenv("AVIVIS_JOBS"); jobs && *jobs) {
    char* end = nullptr;
    const long v = std::strtol(jobs, &end, 10);
    if (*end != '\0' || v < 1) throw UsageError("AVIVIS_JOBS must be a positive integer");
    set_key(j, "/jobs", v);
  }
}

}  // namespace avivis
