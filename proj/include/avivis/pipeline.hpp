#pragma once
// Modeling stages on a feature matrix: split, min-max, PCA, selection,
// classifier training and test-set evaluation. Fitted transforms persist as
// PipelineArtifacts.

#include <filesystem>

#include "avivis/blob.hpp"
#include "avivis/classify.hpp"
#include "avivis/metrics.hpp"
#include "avivis/preprocess.hpp"
#include "avivis/select.hpp"

namespace avivis {

struct ModelingConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 44;
  std::size_t pca_k = 66;  // 0 disables PCA
  SelectorMethod selector = SelectorMethod::Forest;
  std::size_t select_k = 66;
  SelectorOptions selector_options;
  ClassifierConfig classifier;
  std::size_t jobs = 1;
};

inline nlohmann::json modeling_json(const ModelingConfig& c) {
  const auto& m = c.classifier.mlp;
  return {{"test_fraction", c.test_fraction},
          {"seed", c.seed},
          {"pca_k", c.pca_k},
          {"selector", selector_name(c.selector)},
          {"select_k", c.select_k},
          {"forest_trees", c.selector_options.forest_trees},
          {"lasso_lambda", c.selector_options.lasso_lambda},
          {"gbdt_rounds", c.selector_options.gbdt.rounds},
          {"model", preset_name(c.classifier.preset)},
          {"hidden", m.hidden},
          {"epochs", m.epochs},
          {"batch_size", m.batch_size},
          {"patience", m.patience},
          {"learning_rate", m.learning_rate},
          {"dropout", m.dropout},
          {"val_fraction", m.val_fraction}};
}

inline constexpr int kArtifactsVersion = 1;
inline constexpr const char* kArtifactsKind = "avivis-artifacts";

struct PipelineArtifacts {
  int version = kArtifactsVersion;
  std::uint64_t manifest_fingerprint = 0;
  std::vector<std::string> groups;  // schema of the input matrix
  std::size_t input_cols = 0;
  DataSplit split;
  ScalerParams scaler;
  bool use_pca = true;
  PcaModel pca;
  SelectorReport selector;
  nlohmann::json config = nlohmann::json::object();
  std::string model_file;  // optional reference, relative to the artifacts file
  std::vector<std::string> warnings;
};

inline DataSplit make_split(const FeatureMatrix& m, const ModelingConfig& cfg) {
  return split_train_test(m.labels, cfg.test_fraction, cfg.seed);
}

/// Scaler, PCA and selector fitted on split.train. PCA and selector sizes are
/// clamped to what the training data supports; clamping is noted in warnings.
inline PipelineArtifacts fit_transforms(const FeatureMatrix& m, const DataSplit& split, const ModelingConfig& cfg) {
  PipelineArtifacts a;
  a.manifest_fingerprint = m.manifest_fingerprint;
  a.groups = m.schema.names();
  a.input_cols = m.cols;
  a.split = split;
  a.config = modeling_json(cfg);
  a.scaler = fit_minmax(m, split.train);
  FeatureMatrix x = apply_minmax(m, a.scaler);
  a.use_pca = cfg.pca_k > 0;
  if (a.use_pca) {
    const std::size_t cap = std::min(m.cols, split.train.size() - 1);
    const std::size_t k = std::min(cfg.pca_k, cap);
    if (k < cfg.pca_k) {
      a.warnings.push_back("PCA components reduced from " + std::to_string(cfg.pca_k) + " to " + std::to_string(k));
    }
    a.pca = fit_pca(x, split.train, k);
    x = project(x, a.pca);
  }
  SelectorOptions opt = cfg.selector_options;
  opt.jobs = cfg.jobs;
  a.selector = run_selector(cfg.selector, x, split.train, std::min(cfg.select_k, x.cols), cfg.seed, opt);
  a.warnings.insert(a.warnings.end(), a.selector.warnings.begin(), a.selector.warnings.end());
  return a;
}

inline void check_compatible(const FeatureMatrix& m, const PipelineArtifacts& a) {
  if (m.cols != a.input_cols || m.schema.names() != a.groups) {
    throw DataError("feature matrix layout does not match the fitted artifacts");
  }
}

/// scale -> project -> select, for every row.
inline FeatureMatrix apply_transforms(const FeatureMatrix& m, const PipelineArtifacts& a) {
  check_compatible(m, a);
  FeatureMatrix x = apply_minmax(m, a.scaler);
  if (a.use_pca) x = project(x, a.pca);
  return apply_selection(x, a.selector);
}

struct Evaluation {
  ConfusionMatrix confusion;
  ClassReport report;
  std::vector<int> predictions;  // aligned with the evaluated rows
};

inline Evaluation evaluate_rows(const Classifier& c, const FeatureMatrix& x, std::span<const std::size_t> rows) {
  Evaluation e;
  e.predictions = c.predict(x, rows);
  std::vector<int> truth(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) truth[i] = x.labels[rows[i]];
  e.confusion = confusion(truth, e.predictions, std::max(c.n_classes, x.num_classes()));
  e.report = classification_report(e.confusion);
  return e;
}

struct ModelingRun {
  PipelineArtifacts artifacts;
  TrainOutcome training;
  Evaluation evaluation;
};

/// Full modeling path used by the CLI, the ablation driver and the screening
/// grid alike.
inline ModelingRun run_modeling(const FeatureMatrix& m, const ModelingConfig& cfg) {
  ModelingRun r;
  r.artifacts = fit_transforms(m, make_split(m, cfg), cfg);
  const FeatureMatrix x = apply_transforms(m, r.artifacts);
  ClassifierConfig cc = cfg.classifier;
  cc.jobs = cfg.jobs;
  r.training = train_classifier(x, r.artifacts.split.train, cc, cfg.seed);
  r.evaluation = evaluate_rows(r.training.classifier, x, r.artifacts.split.test);
  return r;
}

// ---- persistence

inline Blob artifacts_to_blob(const PipelineArtifacts& a) {
  Blob b;
  b.kind = kArtifactsKind;
  b.meta["version"] = a.version;
  b.meta["manifest_fingerprint"] = hex64(a.manifest_fingerprint);
  b.meta["groups"] = a.groups;
  b.meta["input_cols"] = a.input_cols;
  b.meta["split"] = {{"seed", a.split.seed}, {"test_fraction", a.split.test_fraction}};
  b.meta["use_pca"] = a.use_pca;
  b.meta["pca_k"] = a.pca.k;
  b.meta["config"] = a.config;
  b.meta["model_file"] = a.model_file;
  b.arrays["split.train"] = std::vector<double>(a.split.train.begin(), a.split.train.end());
  b.arrays["split.test"] = std::vector<double>(a.split.test.begin(), a.split.test.end());
  b.arrays["scaler.min"] = a.scaler.min;
  b.arrays["scaler.max"] = a.scaler.max;
  if (a.use_pca) {
    b.arrays["pca.mean"] = a.pca.mean;
    b.arrays["pca.components"] = a.pca.components;
    b.arrays["pca.explained_variance"] = a.pca.explained_variance;
  }
  append_selector(a.selector, b);
  return b;
}

inline PipelineArtifacts artifacts_from_blob(const Blob& b) {
  if (b.kind != kArtifactsKind) throw DataError("not an artifacts file (kind '" + b.kind + "')");
  PipelineArtifacts a;
  auto to_index = [](const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (double d : v) out.push_back(static_cast<std::size_t>(d));
    return out;
  };
  try {
    a.version = b.meta.at("version").get<int>();
    if (a.version != kArtifactsVersion) throw DataError("unsupported artifacts version " + std::to_string(a.version));
    a.manifest_fingerprint = std::stoull(b.meta.at("manifest_fingerprint").get<std::string>(), nullptr, 16);
    a.groups = b.meta.at("groups").get<std::vector<std::string>>();
    a.input_cols = b.meta.at("input_cols").get<std::size_t>();
    a.split.seed = b.meta.at("split").at("seed").get<std::uint64_t>();
    a.split.test_fraction = b.meta.at("split").at("test_fraction").get<double>();
    a.use_pca = b.meta.at("use_pca").get<bool>();
    a.pca.k = b.meta.at("pca_k").get<std::size_t>();
    a.config = b.meta.at("config");
    a.model_file = b.meta.value("model_file", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad artifacts metadata: ") + e.what());
  }
  a.split.train = to_index(b.array("split.train"));
  a.split.test = to_index(b.array("split.test"));
  a.scaler.min = b.array("scaler.min");
  a.scaler.max = b.array("scaler.max");
  if (a.scaler.min.size() != a.input_cols || a.scaler.max.size() != a.input_cols) throw DataError("corrupt scaler arrays");
  if (a.use_pca) {
    a.pca.dim = a.input_cols;
    a.pca.mean = b.array("pca.mean");
    a.pca.components = b.array("pca.components");
    a.pca.explained_variance = b.array("pca.explained_variance");
    if (a.pca.mean.size() != a.pca.dim || a.pca.components.size() != a.pca.k * a.pca.dim ||
        a.pca.explained_variance.size() != a.pca.k) {
      throw DataError("corrupt PCA arrays");
    }
  }
  a.selector = read_selector(b);
  return a;
}

inline void save_artifacts(const PipelineArtifacts& a, const std::filesystem::path& p) { save_blob(artifacts_to_blob(a), p); }
inline PipelineArtifacts load_artifacts(const std::filesystem::path& p) { return artifacts_from_blob(load_blob(p)); }

// Per-epoch history, one row per epoch.
inline std::string history_csv(const std::vector<EpochRecord>& h) {
  std::string s = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const auto& e : h) {
    s += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," + fmt(e.train_accuracy) + "," + fmt(e.val_loss) + "," +
         fmt(e.val_accuracy) + "\n";
  }
  return s;
}

}  // namespace avivis
