#pragma once
// One handle over the four model families, plus model files.

#include <filesystem>
#include <variant>

#include "avivis/blob.hpp"
#include "avivis/cart.hpp"
#include "avivis/mlp.hpp"
#include "avivis/svm.hpp"

namespace avivis {

enum class ModelPreset { MlpFinal, MlpScreen, Tree, Forest, Svm };

inline const char* preset_name(ModelPreset p) {
  switch (p) {
    case ModelPreset::MlpFinal: return "mlp-final";
    case ModelPreset::MlpScreen: return "mlp-screen";
    case ModelPreset::Tree: return "tree";
    case ModelPreset::Forest: return "forest";
    case ModelPreset::Svm: return "svm";
  }
  return "?";
}

inline ModelPreset parse_preset(const std::string& s) {
  for (auto p : {ModelPreset::MlpFinal, ModelPreset::MlpScreen, ModelPreset::Tree, ModelPreset::Forest, ModelPreset::Svm})
    if (s == preset_name(p)) return p;
  if (s == "mlp") return ModelPreset::MlpFinal;
  throw UsageError("unknown model preset '" + s + "' (mlp-final, mlp-screen, tree, forest, svm)");
}

struct ClassifierConfig {
  ModelPreset preset = ModelPreset::MlpFinal;
  MlpTrainConfig mlp = mlp_final_config();
  TreeParams tree;
  ForestParams forest;
  SvmParams svm;
  std::size_t jobs = 1;
};

inline ClassifierConfig classifier_config(ModelPreset p) {
  ClassifierConfig c;
  c.preset = p;
  if (p == ModelPreset::MlpScreen) c.mlp = mlp_screen_config();
  return c;
}

struct Classifier {
  ModelPreset preset = ModelPreset::MlpFinal;
  std::size_t n_classes = 0;
  std::size_t input_dim = 0;
  std::variant<MlpModel, TreeModel, ForestModel, SvmModel> model;

  /// Class scores for one row: probabilities for the network and trees, vote
  /// fractions for the forest, decision values for the SVM.
  std::vector<double> scores(std::span<const double> row) const {
    if (row.size() != input_dim) throw UsageError("row width does not match the model input");
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, SvmModel>) return m.decision(row);
          else return m.predict_proba(row);
        },
        model);
  }

  int predict(std::span<const double> row) const {
    const auto s = scores(row);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }

  std::vector<int> predict(const FeatureMatrix& x, std::span<const std::size_t> rows) const {
    std::vector<int> out(rows.size());
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
      // Batched forward pass in chunks.
      if (x.cols != input_dim) throw UsageError("matrix width does not match the model input");
      constexpr std::size_t kChunk = 256;
      for (std::size_t s = 0; s < rows.size(); s += kChunk) {
        const std::size_t e = std::min(rows.size(), s + kChunk);
        const Eigen::MatrixXd p = mlp->forward(gather_rows(x, rows.subspan(s, e - s)));
        for (std::size_t i = s; i < e; ++i) {
          Eigen::Index arg;
          p.row(static_cast<Eigen::Index>(i - s)).maxCoeff(&arg);
          out[i] = static_cast<int>(arg);
        }
      }
      return out;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = predict(x.row(rows[i]));
    return out;
  }

  std::vector<int> predict_all(const FeatureMatrix& x) const {
    std::vector<std::size_t> rows(x.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return predict(x, rows);
  }
};

struct TrainOutcome {
  Classifier classifier;
  std::vector<EpochRecord> history;  // network presets only
  std::vector<std::string> warnings;
};

inline TrainOutcome train_classifier(const FeatureMatrix& x, std::span<const std::size_t> train,
                                     const ClassifierConfig& cfg, std::uint64_t seed) {
  TrainOutcome out;
  Classifier& c = out.classifier;
  c.preset = cfg.preset;
  c.n_classes = std::max<std::size_t>(x.num_classes(), count_classes(x.labels));
  c.input_dim = x.cols;
  switch (cfg.preset) {
    case ModelPreset::MlpFinal:
    case ModelPreset::MlpScreen: {
      auto r = train_mlp(x, train, cfg.mlp, seed);
      c.model = std::move(r.model);
      out.history = std::move(r.history);
      break;
    }
    case ModelPreset::Tree: c.model = train_tree(x, train, cfg.tree, seed); break;
    case ModelPreset::Forest: {
      ForestParams fp = cfg.forest;
      fp.jobs = cfg.jobs;
      c.model = train_forest(x, train, fp, seed);
      break;
    }
    case ModelPreset::Svm: {
      SvmParams sp = cfg.svm;
      sp.jobs = cfg.jobs;
      auto r = train_svm(x, train, sp);
      c.model = std::move(r.model);
      out.warnings = std::move(r.warnings);
      break;
    }
  }
  return out;
}

inline constexpr const char* kModelKind = "avivis-model";

inline Blob classifier_to_blob(const Classifier& c) {
  Blob b;
  b.kind = kModelKind;
  b.meta["preset"] = preset_name(c.preset);
  b.meta["n_classes"] = c.n_classes;
  b.meta["input_dim"] = c.input_dim;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpModel>) {
          b.meta["family"] = "mlp";
          append_mlp(m, b);
        } else if constexpr (std::is_same_v<T, TreeModel>) {
          b.meta["family"] = "tree";
          append_tree(m, "tree.", b);
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          b.meta["family"] = "forest";
          b.meta["n_trees"] = m.trees.size();
          for (std::size_t t = 0; t < m.trees.size(); ++t) append_tree(m.trees[t], "t" + std::to_string(t) + ".", b);
        } else {
          b.meta["family"] = "svm";
          append_svm(m, b);
        }
      },
      c.model);
  return b;
}

inline Classifier classifier_from_blob(const Blob& b) {
  if (b.kind != kModelKind) throw DataError("not a model file (kind '" + b.kind + "')");
  Classifier c;
  std::string family;
  try {
    c.preset = parse_preset(b.meta.at("preset").get<std::string>());
    c.n_classes = b.meta.at("n_classes").get<std::size_t>();
    c.input_dim = b.meta.at("input_dim").get<std::size_t>();
    family = b.meta.at("family").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model metadata: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  if (family == "mlp") {
    c.model = read_mlp(b);
  } else if (family == "tree") {
    c.model = read_tree(b, "tree.", c.input_dim, c.n_classes);
  } else if (family == "forest") {
    ForestModel f;
    f.n_classes = c.n_classes;
    const auto n = b.meta.value("n_trees", std::size_t{0});
    for (std::size_t t = 0; t < n; ++t) f.trees.push_back(read_tree(b, "t" + std::to_string(t) + ".", c.input_dim, c.n_classes));
    c.model = std::move(f);
  } else if (family == "svm") {
    c.model = read_svm(b);
  } else {
    throw DataError("unknown model family '" + family + "'");
  }
  return c;
}

inline void save_classifier(const Classifier& c, const std::filesystem::path& path) { save_blob(classifier_to_blob(c), path); }
inline Classifier load_classifier(const std::filesystem::path& path) { return classifier_from_blob(load_blob(path)); }

}  // namespace avivis
