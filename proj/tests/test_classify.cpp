#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "support.hpp"

using namespace avivis;
using namespace testsupport;

namespace {

std::vector<std::vector<oracle::Vec>> weights_of(const MlpModel& m) {
  std::vector<std::vector<oracle::Vec>> w;
  for (const auto& l : m.layers) {
    std::vector<oracle::Vec> layer(static_cast<std::size_t>(l.w.rows()));
    for (Eigen::Index o = 0; o < l.w.rows(); ++o)
      for (Eigen::Index i = 0; i < l.w.cols(); ++i) layer[static_cast<std::size_t>(o)].push_back(l.w(o, i));
    w.push_back(layer);
  }
  return w;
}

std::vector<oracle::Vec> biases_of(const MlpModel& m) {
  std::vector<oracle::Vec> b;
  for (const auto& l : m.layers) b.emplace_back(l.b.data(), l.b.data() + l.b.size());
  return b;
}

double accuracy(const Classifier& c, const FeatureMatrix& m, std::span<const std::size_t> rows) {
  const auto p = c.predict(m, rows);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) ok += p[i] == m.labels[rows[i]];
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

}  // namespace

TEST(Mlp, ZeroNetworkPredictsUniform) {
  const MlpModel m = make_mlp({6, 256, 128, 4}, 1, true);
  Rng rng(1);
  std::vector<double> row(6);
  for (auto& v : row) v = rng.normal();
  for (double p : m.predict_proba(row)) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Mlp, HeUniformInitBounds) {
  const MlpModel m = make_mlp({24, 16, 3}, 2);
  for (const auto& l : m.layers) {
    const double lim = std::sqrt(6.0 / static_cast<double>(l.w.cols()));
    EXPECT_LE(l.w.cwiseAbs().maxCoeff(), lim);
    EXPECT_EQ(l.b.cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(m.parameter_count(), 24u * 16 + 16 + 16 * 3 + 3);
}

TEST(Mlp, ForwardMatchesNeuronOracle) {
  Rng rng(3);
  MlpModel m = make_mlp({7, 9, 5, 4}, 3);
  for (auto& l : m.layers) l.b = Eigen::VectorXd::Random(l.b.size());
  for (int t = 0; t < 20; ++t) {
    std::vector<double> row(7);
    for (auto& v : row) v = rng.normal() * 2;
    const auto got = m.predict_proba(row);
    const auto want = oracle::mlp_forward(weights_of(m), biases_of(m), row);
    ASSERT_EQ(got.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
    EXPECT_NEAR(std::accumulate(got.begin(), got.end(), 0.0), 1.0, 1e-6);
  }
}

TEST(Mlp, ArgmaxInvariantToLogitShift) {
  Rng rng(4);
  MlpModel m = make_mlp({5, 8, 4}, 4);
  MlpModel shifted = m;
  shifted.layers.back().b.array() += 17.0;
  for (int t = 0; t < 30; ++t) {
    std::vector<double> row(5);
    for (auto& v : row) v = rng.normal();
    EXPECT_EQ(m.predict(row), shifted.predict(row));
    const auto a = m.predict_proba(row), b = shifted.predict_proba(row);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  MlpModel m = make_mlp({6, 10, 7, 4}, 5);
  for (auto& l : m.layers)
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = 0.1 * rng.normal();
  Eigen::MatrixXd x(5, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const std::vector<int> y = {0, 3, 1, 2, 3};
  const auto [loss, grad] = loss_and_gradient(m, x, y);
  auto p = flatten_parameters(m);
  double worst = 0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    MlpModel q = m;
    p[i] = keep + h;
    assign_parameters(q, p);
    const double up = loss_and_gradient(q, x, y).first;
    p[i] = keep - h;
    assign_parameters(q, p);
    const double down = loss_and_gradient(q, x, y).first;
    p[i] = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-7}));
  }
  EXPECT_LT(worst, 1e-4);
  EXPECT_TRUE(std::isfinite(loss));
}

TEST(Mlp, BlobsReachHighAccuracy) {
  const FeatureMatrix m = make_blobs(100, 4, 10, 0.3, 6);
  const auto split = split_train_test(m.labels, 0.2, 44);
  auto cfg = classifier_config(ModelPreset::MlpFinal);
  const auto out = train_classifier(m, split.train, cfg, 44);
  EXPECT_GE(accuracy(out.classifier, m, split.test), 0.99);
  EXPECT_LE(out.history.size(), 100u);
}

TEST(Mlp, OverfitsSmallBatch) {
  const FeatureMatrix m = make_blobs(8, 4, 6, 1.5, 7, 0.3);
  MlpTrainConfig cfg = mlp_final_config();
  cfg.dropout = 0.0;
  cfg.val_fraction = 0.0;
  cfg.epochs = 500;
  const auto r = train_mlp(m, iota(32), cfg, 44);
  EXPECT_EQ(r.history.size(), 500u);
  EXPECT_LT(r.history.back().train_loss, 0.01);
}

TEST(Mlp, DeterministicAndDropoutOnlyAtTraining) {
  const FeatureMatrix m = make_blobs(30, 4, 8, 0.8, 8);
  MlpTrainConfig cfg = mlp_screen_config();
  cfg.epochs = 5;
  const auto a = train_mlp(m, iota(m.rows), cfg, 44);
  const auto b = train_mlp(m, iota(m.rows), cfg, 44);
  EXPECT_EQ(flatten_parameters(a.model), flatten_parameters(b.model));
  const auto p1 = a.model.predict_proba(m.row(3));
  const auto p2 = a.model.predict_proba(m.row(3));
  EXPECT_EQ(p1, p2);
  const auto c = train_mlp(m, iota(m.rows), cfg, 45);
  EXPECT_NE(flatten_parameters(a.model), flatten_parameters(c.model));
}

TEST(Mlp, EarlyStoppingRestoresBestEpoch) {
  const FeatureMatrix m = make_blobs(40, 4, 6, 2.0, 9, 0.4);
  MlpTrainConfig cfg = mlp_final_config();
  cfg.epochs = 60;
  const auto r = train_mlp(m, iota(m.rows), cfg, 44);
  double best = 1e300;
  int best_epoch = 0;
  for (const auto& e : r.history)
    if (e.val_loss < best) best = e.val_loss, best_epoch = e.epoch;
  EXPECT_EQ(r.best_epoch, best_epoch);
  if (r.stopped_early) {
    EXPECT_EQ(static_cast<int>(r.history.size()), best_epoch + cfg.patience);
  }
}

TEST(Mlp, ConfigValidation) {
  const FeatureMatrix m = make_blobs(5, 2, 2, 1.0, 10);
  MlpTrainConfig cfg;
  cfg.dropout = 1.0;
  EXPECT_THROW(train_mlp(m, iota(m.rows), cfg, 1), UsageError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(train_mlp(m, iota(m.rows), cfg, 1), UsageError);
}

TEST(Mlp, NonFiniteInputIsNumericError) {
  FeatureMatrix m = make_blobs(10, 2, 3, 1.0, 11);
  m.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  MlpTrainConfig cfg = mlp_screen_config();
  cfg.epochs = 2;
  EXPECT_THROW(train_mlp(m, iota(m.rows), cfg, 1), NumericError);
}

TEST(Tree, ThresholdSeparableIsDepthOne) {
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    v.push_back(i);
    y.push_back(i < 10 ? 0 : 1);
  }
  const FeatureMatrix m = make_matrix(20, 1, v, y, {"a", "b"});
  const TreeModel t = train_tree(m, iota(20), TreeParams{}, 1);
  EXPECT_EQ(t.depth(), 1);
  EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 9.5);
  for (std::size_t r = 0; r < 20; ++r) EXPECT_EQ(t.predict(m.row(r)), y[r]);
}

TEST(Tree, PureNodeIsLeaf) {
  const FeatureMatrix m = make_blobs(20, 1, 3, 1.0, 12);
  const TreeModel t = train_tree(m, iota(m.rows), TreeParams{}, 1);
  EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.depth(), 0);
}

TEST(Tree, RootSplitMatchesExhaustiveOracle) {
  Rng rng(13);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 8 + rng.below(13), d = 1 + rng.below(4);
    std::vector<double> v(n * d);
    std::vector<oracle::Vec> rows(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(3));
      for (std::size_t c = 0; c < d; ++c) rows[i].push_back(v[i * d + c] = std::round(rng.uniform(0, 6)));
    }
    const FeatureMatrix m = make_matrix(n, d, v, y, {"a", "b", "c"});
    TreeParams p;
    p.min_samples_leaf = 2;
    const TreeModel tree = train_tree(m, iota(n), p, 1);
    const auto want = oracle::best_split(rows, y, 3, 2);
    double parent = 1;
    for (int k = 0; k < 3; ++k) {
      const double f = std::count(y.begin(), y.end(), k) / static_cast<double>(n);
      parent -= f * f;
    }
    if (want.feature < 0 || parent - want.impurity <= 1e-12 || parent <= 1e-12) {
      EXPECT_LT(tree.nodes[0].feature, 0);
      continue;
    }
    EXPECT_EQ(tree.nodes[0].feature, want.feature);
    EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, want.threshold);
  }
}

TEST(Tree, DepthAndLeafSizeLimits) {
  const FeatureMatrix m = make_blobs(100, 4, 5, 2.0, 14, 0.3);
  const TreeModel t = train_tree(m, iota(m.rows), TreeParams{}, 1);
  EXPECT_LE(t.depth(), 15);
  for (const auto& n : t.nodes) {
    if (n.feature < 0) {
      EXPECT_GE(n.samples, 5u);
    }
  }
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsTree) {
  const FeatureMatrix m = make_blobs(30, 3, 4, 1.0, 15, 0.5);
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.max_features = m.cols;
  fp.tree = TreeParams{};
  const ForestModel f = train_forest(m, iota(m.rows), fp, 1);
  const TreeModel t = train_tree(m, iota(m.rows), TreeParams{}, 1);
  ASSERT_EQ(f.trees[0].nodes.size(), t.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    EXPECT_EQ(f.trees[0].nodes[i].feature, t.nodes[i].feature);
    EXPECT_EQ(f.trees[0].nodes[i].threshold, t.nodes[i].threshold);
  }
}

TEST(Forest, VotesSumToTreeCount) {
  const FeatureMatrix m = make_blobs(30, 4, 6, 1.0, 16);
  const ForestModel f = train_forest(m, iota(m.rows), ForestParams{}, 44);
  EXPECT_EQ(f.trees.size(), 100u);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto v = f.votes(m.row(r));
    EXPECT_DOUBLE_EQ(std::accumulate(v.begin(), v.end(), 0.0), 100.0);
  }
}

TEST(Forest, AtLeastAsGoodAsTreeOnBlobs) {
  const FeatureMatrix m = make_blobs(80, 4, 10, 1.5, 17, 0.6);
  const auto split = split_train_test(m.labels, 0.2, 44);
  const auto forest = train_classifier(m, split.train, classifier_config(ModelPreset::Forest), 44).classifier;
  const auto tree = train_classifier(m, split.train, classifier_config(ModelPreset::Tree), 44).classifier;
  EXPECT_GE(accuracy(forest, m, split.test), accuracy(tree, m, split.test) - 0.02);
}

TEST(Forest, IndependentOfThreadCount) {
  const FeatureMatrix m = make_blobs(20, 3, 9, 1.0, 18);
  ForestParams a;
  a.n_trees = 12;
  ForestParams b = a;
  b.jobs = 3;
  const auto fa = train_forest(m, iota(m.rows), a, 7), fb = train_forest(m, iota(m.rows), b, 7);
  EXPECT_EQ(fa.feature_importance(), fb.feature_importance());
  for (std::size_t r = 0; r < m.rows; ++r) EXPECT_EQ(fa.votes(m.row(r)), fb.votes(m.row(r)));
}

TEST(Svm, SeparableTwoClassesTrainPerfectly) {
  const FeatureMatrix m = make_blobs(30, 2, 2, 0.2, 19, 3.0);
  const auto r = train_svm(m, iota(m.rows), SvmParams{});
  for (std::size_t i = 0; i < m.rows; ++i) EXPECT_EQ(r.model.predict(m.row(i)), m.labels[i]);
}

TEST(Svm, KktResidualsOnFreeSupportVectors) {
  const FeatureMatrix m = make_blobs(25, 3, 4, 1.2, 20, 0.8);
  SvmParams p;
  const auto r = train_svm(m, iota(m.rows), p);
  // Rebuild each binary decision from its own alphas.
  const std::size_t n = m.rows, d = m.cols;
  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) z[i * d + c] = (m.at(i, c) - r.model.mean[c]) / r.model.scale[c];
  std::size_t free_count = 0;
  for (std::size_t cl = 0; cl < 3; ++cl) {
    const auto& b = r.binaries[cl];
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GE(b.alpha[i], 0.0);
      EXPECT_LE(b.alpha[i], p.C + 1e-12);
      if (!(b.alpha[i] > 1e-8 && b.alpha[i] < p.C - 1e-8)) continue;
      ++free_count;
      double f = b.bias;
      for (std::size_t j = 0; j < n; ++j) {
        double d2 = 0;
        for (std::size_t c = 0; c < d; ++c) d2 += (z[i * d + c] - z[j * d + c]) * (z[i * d + c] - z[j * d + c]);
        const double yj = m.labels[j] == static_cast<int>(cl) ? 1 : -1;
        f += b.alpha[j] * yj * std::exp(-p.gamma * d2);
      }
      const double yi = m.labels[i] == static_cast<int>(cl) ? 1 : -1;
      EXPECT_LT(std::abs(yi * f - 1), 1e-2);
    }
  }
  EXPECT_GT(free_count, 0u);
}

TEST(Svm, FlatKernelGivesNearConstantDecision) {
  const FeatureMatrix m = make_blobs(10, 2, 3, 1.0, 21);
  SvmParams p;
  p.gamma = 1e-9;
  const auto r = train_svm(m, iota(m.rows), p);
  const auto f0 = r.model.decision(m.row(0));
  for (std::size_t i = 1; i < m.rows; ++i) {
    const auto f = r.model.decision(m.row(i));
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(f[k], f0[k], 1e-4);
  }
}

TEST(Svm, GridSearchCoversCells) {
  const FeatureMatrix m = make_blobs(15, 3, 4, 1.0, 22);
  const std::vector<double> gammas = {0.01, 0.1}, Cs = {0.5, 1.0, 2.0};
  const auto cells = svm_grid_search(m, iota(m.rows), gammas, Cs, 3, 44);
  EXPECT_EQ(cells.size(), 6u);
  for (const auto& c : cells) {
    EXPECT_GE(c.accuracy, 0.0);
    EXPECT_LE(c.accuracy, 1.0);
  }
}

TEST(Classifier, SerializationRoundTripAllPresets) {
  TempDir d;
  const FeatureMatrix m = make_blobs(15, 4, 5, 1.0, 23);
  for (auto preset : {ModelPreset::MlpFinal, ModelPreset::MlpScreen, ModelPreset::Tree, ModelPreset::Forest, ModelPreset::Svm}) {
    auto cfg = classifier_config(preset);
    cfg.mlp.epochs = 3;
    cfg.forest.n_trees = 10;
    const auto c = train_classifier(m, iota(m.rows), cfg, 44).classifier;
    save_classifier(c, d / "model.bin");
    const auto back = load_classifier(d / "model.bin");
    EXPECT_EQ(back.preset, preset);
    for (std::size_t r = 0; r < m.rows; ++r) EXPECT_EQ(back.scores(m.row(r)), c.scores(m.row(r))) << preset_name(preset);
    EXPECT_EQ(back.predict_all(m), c.predict_all(m));
  }
}

TEST(Classifier, RejectsWrongWidthAndCorruptFile) {
  TempDir d;
  const FeatureMatrix m = make_blobs(10, 2, 3, 1.0, 24);
  const auto c = train_classifier(m, iota(m.rows), classifier_config(ModelPreset::Tree), 1).classifier;
  const std::vector<double> row(4, 0.0);
  EXPECT_THROW(c.scores(row), UsageError);
  save_classifier(c, d / "m.bin");
  std::string bytes = slurp(d / "m.bin");
  detail::write_bytes(d / "m.bin", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_classifier(d / "m.bin"), DataError);
  EXPECT_THROW(parse_preset("knn"), UsageError);
}

TEST(ClassifierProperty, AllTrainersDeterministic) {
  const FeatureMatrix m = make_blobs(12, 3, 4, 1.0, 25);
  for (auto preset : {ModelPreset::MlpScreen, ModelPreset::Tree, ModelPreset::Forest, ModelPreset::Svm}) {
    auto cfg = classifier_config(preset);
    cfg.mlp.epochs = 4;
    cfg.forest.n_trees = 8;
    const auto a = train_classifier(m, iota(m.rows), cfg, 9).classifier;
    cfg.jobs = 2;
    const auto b = train_classifier(m, iota(m.rows), cfg, 9).classifier;
    for (std::size_t r = 0; r < m.rows; ++r) EXPECT_EQ(a.scores(m.row(r)), b.scores(m.row(r))) << preset_name(preset);
  }
}
