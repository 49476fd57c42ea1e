#pragma once
// Fully connected ReLU network with a softmax head, trained with Adam on
// integer-label cross-entropy, inverted dropout and early stopping.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "avivis/blob.hpp"
#include "avivis/featstore.hpp"

namespace avivis {

struct MlpLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

struct MlpModel {
  std::vector<std::size_t> sizes;  // input, hidden..., classes
  std::vector<MlpLayer> layers;

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t n_classes() const { return sizes.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
  }

  /// Rows of x are samples; returns class probabilities per row.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Eigen::MatrixXd z = a * layers[i].w.transpose();
      z.rowwise() += layers[i].b.transpose();
      a = i + 1 < layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double mx = a.row(r).maxCoeff();
      a.row(r) = (a.row(r).array() - mx).exp();
      a.row(r) /= a.row(r).sum();
    }
    return a;
  }

  std::vector<double> predict_proba(std::span<const double> row) const {
    Eigen::MatrixXd x(1, static_cast<Eigen::Index>(row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) x(0, static_cast<Eigen::Index>(c)) = row[c];
    const Eigen::MatrixXd p = forward(x);
    return {p.data(), p.data() + p.size()};
  }

  int predict(std::span<const double> row) const {
    const auto p = predict_proba(row);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

/// He-uniform weights (limit sqrt(6 / fan_in)), zero biases. `zero` gives an
/// all-zero network.
inline MlpModel make_mlp(const std::vector<std::size_t>& sizes, std::uint64_t seed, bool zero = false) {
  if (sizes.size() < 2) throw UsageError("network needs input and output sizes");
  for (auto s : sizes)
    if (s == 0) throw UsageError("layer sizes must be positive");
  MlpModel m;
  m.sizes = sizes;
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    MlpLayer l;
    const auto in = static_cast<Eigen::Index>(sizes[i]), out = static_cast<Eigen::Index>(sizes[i + 1]);
    l.w = Eigen::MatrixXd::Zero(out, in);
    l.b = Eigen::VectorXd::Zero(out);
    if (!zero) {
      const double limit = std::sqrt(6.0 / static_cast<double>(in));
      for (Eigen::Index r = 0; r < out; ++r)
        for (Eigen::Index c = 0; c < in; ++c) l.w(r, c) = rng.uniform(-limit, limit);
    }
    m.layers.push_back(std::move(l));
  }
  return m;
}

inline std::vector<double> flatten_parameters(const MlpModel& m) {
  std::vector<double> p;
  p.reserve(m.parameter_count());
  for (const auto& l : m.layers) {
    p.insert(p.end(), l.w.data(), l.w.data() + l.w.size());
    p.insert(p.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return p;
}

inline void assign_parameters(MlpModel& m, std::span<const double> p) {
  if (p.size() != m.parameter_count()) throw UsageError("parameter vector has wrong length");
  std::size_t at = 0;
  for (auto& l : m.layers) {
    std::copy_n(p.data() + at, l.w.size(), l.w.data());
    at += static_cast<std::size_t>(l.w.size());
    std::copy_n(p.data() + at, l.b.size(), l.b.data());
    at += static_cast<std::size_t>(l.b.size());
  }
}

struct BatchResult {
  double loss = 0.0;  // mean cross-entropy
  std::size_t correct = 0;
  std::vector<MlpLayer> grad;  // same shapes as the model, gradient of the mean loss
};

/// Forward and backward pass over one batch. Dropout with rate p is applied
/// to every hidden activation when `rng` is non-null (inverted scaling).
inline BatchResult forward_backward(const MlpModel& m, const Eigen::MatrixXd& x, std::span<const int> y,
                                    double dropout, Rng* rng, bool want_grad = true) {
  const std::size_t L = m.layers.size();
  const auto bsz = x.rows();
  std::vector<Eigen::MatrixXd> acts(L + 1);  // acts[0] = input, acts[i] = output of layer i-1 after ReLU/dropout
  std::vector<Eigen::MatrixXd> masks(L);      // ReLU * dropout scaling, per hidden layer
  acts[0] = x;
  Eigen::MatrixXd z;
  for (std::size_t i = 0; i < L; ++i) {
    z = acts[i] * m.layers[i].w.transpose();
    z.rowwise() += m.layers[i].b.transpose();
    if (i + 1 == L) break;
    Eigen::MatrixXd mask = (z.array() > 0.0).cast<double>();
    if (rng && dropout > 0.0) {
      const double keep = 1.0 / (1.0 - dropout);
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) *= rng->uniform() >= dropout ? keep : 0.0;
    }
    acts[i + 1] = z.cwiseProduct(mask);
    masks[i] = std::move(mask);
  }
  // z holds logits; softmax and cross-entropy via log-sum-exp.
  BatchResult out;
  Eigen::MatrixXd delta(bsz, z.cols());
  for (Eigen::Index r = 0; r < bsz; ++r) {
    const double mx = z.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(r).array() - mx).exp();
    const double s = e.sum();
    const auto t = static_cast<Eigen::Index>(y[static_cast<std::size_t>(r)]);
    out.loss += std::log(s) + mx - z(r, t);
    Eigen::Index arg;
    z.row(r).maxCoeff(&arg);
    out.correct += arg == t ? 1 : 0;
    delta.row(r) = e / s;
    delta(r, t) -= 1.0;
  }
  out.loss /= static_cast<double>(bsz);
  if (!want_grad) return out;
  delta /= static_cast<double>(bsz);
  out.grad.resize(L);
  for (std::size_t i = L; i-- > 0;) {
    out.grad[i].w = delta.transpose() * acts[i];
    out.grad[i].b = delta.colwise().sum().transpose();
    if (i > 0) delta = (delta * m.layers[i].w).cwiseProduct(masks[i - 1]);
  }
  return out;
}

inline Eigen::MatrixXd gather_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < m.cols; ++c) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = m.at(rows[i], c);
  return x;
}

/// Mean loss and flattened gradient with dropout disabled.
inline std::pair<double, std::vector<double>> loss_and_gradient(const MlpModel& m, const Eigen::MatrixXd& x,
                                                                std::span<const int> y) {
  const auto r = forward_backward(m, x, y, 0.0, nullptr);
  std::vector<double> g;
  for (const auto& l : r.grad) {
    g.insert(g.end(), l.w.data(), l.w.data() + l.w.size());
    g.insert(g.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return {r.loss, g};
}

struct MlpTrainConfig {
  std::vector<std::size_t> hidden{256, 128};
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dropout = 0.5;
  int epochs = 100;
  std::size_t batch_size = 32;
  int patience = 3;
  double val_fraction = 0.1;

  void validate() const {
    if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
    if (epochs < 1 || batch_size == 0) throw UsageError("epochs and batch size must be positive");
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw UsageError("validation fraction must lie in [0, 1)");
    for (auto h : hidden)
      if (h == 0) throw UsageError("hidden layer sizes must be positive");
  }
};

inline MlpTrainConfig mlp_final_config() { return {}; }

inline MlpTrainConfig mlp_screen_config() {
  MlpTrainConfig c;
  c.hidden = {128, 64};
  c.patience = 5;
  return c;
}

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct MlpTrainResult {
  MlpModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool stopped_early = false;
};

/// Mean loss and accuracy in inference mode.
inline std::pair<double, double> mlp_evaluate(const MlpModel& m, const FeatureMatrix& x, std::span<const std::size_t> rows) {
  if (rows.empty()) return {0.0, 0.0};
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = x.labels[rows[i]];
  const auto r = forward_backward(m, gather_rows(x, rows), y, 0.0, nullptr, false);
  return {r.loss, static_cast<double>(r.correct) / static_cast<double>(rows.size())};
}

/// Training rows are split into a fitting part and a stratified validation
/// slice. Early stopping watches validation loss; the best weights are
/// restored. Without a validation slice all epochs run and the last weights
/// are kept.
inline MlpTrainResult train_mlp(const FeatureMatrix& x, std::span<const std::size_t> train, const MlpTrainConfig& cfg,
                                std::uint64_t seed, const MlpModel* init = nullptr) {
  cfg.validate();
  if (train.empty()) throw UsageError("network training needs rows");
  const std::size_t n_classes = std::max<std::size_t>(x.num_classes(), count_classes(x.labels));
  std::vector<std::size_t> sizes{x.cols};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(n_classes);

  MlpTrainResult res;
  res.model = init ? *init : make_mlp(sizes, seed);
  if (res.model.sizes != sizes) throw UsageError("initial network does not match the configured shape");

  std::vector<std::size_t> fit(train.begin(), train.end()), val;
  if (cfg.val_fraction > 0.0) {
    auto part = stratified_partition(x.labels, train, cfg.val_fraction, derive_seed(seed, "val"));
    if (!part.test.empty() && !part.train.empty()) {
      fit = std::move(part.train);
      val = std::move(part.test);
    }
  }

  MlpModel& m = res.model;
  std::vector<MlpLayer> mom(m.layers.size()), vel(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    mom[i] = vel[i] = {Eigen::MatrixXd::Zero(m.layers[i].w.rows(), m.layers[i].w.cols()),
                       Eigen::VectorXd::Zero(m.layers[i].b.size())};
  }
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  Rng dropout_rng(derive_seed(seed, "dropout"));
  std::uint64_t step = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  MlpModel best = m;
  int wait = 0;
  std::vector<int> yb;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(fit);
    double loss_sum = 0.0;
    std::size_t correct = 0, batches = 0;
    for (std::size_t start = 0; start < fit.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(fit.size(), start + cfg.batch_size);
      std::span<const std::size_t> rows(fit.data() + start, end - start);
      yb.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) yb[i] = x.labels[rows[i]];
      const auto br = forward_backward(m, gather_rows(x, rows), yb, cfg.dropout, &dropout_rng);
      if (!std::isfinite(br.loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches + 1));
      }
      loss_sum += br.loss;
      correct += br.correct;
      ++batches;
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < m.layers.size(); ++i) {
        auto update = [&](auto& param, auto& mo, auto& ve, const auto& g) {
          mo = cfg.beta1 * mo + (1.0 - cfg.beta1) * g;
          ve = cfg.beta2 * ve + (1.0 - cfg.beta2) * g.cwiseProduct(g);
          param.array() -= cfg.learning_rate * (mo.array() / c1) / ((ve.array() / c2).sqrt() + cfg.epsilon);
        };
        update(m.layers[i].w, mom[i].w, vel[i].w, br.grad[i].w);
        update(m.layers[i].b, mom[i].b, vel[i].b, br.grad[i].b);
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(fit.size());
    if (!val.empty()) std::tie(rec.val_loss, rec.val_accuracy) = mlp_evaluate(m, x, val);
    if (!std::isfinite(rec.val_loss)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    res.history.push_back(rec);
    if (val.empty()) {
      res.best_epoch = epoch;
      continue;
    }
    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      best = m;
      res.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      res.stopped_early = true;
      break;
    }
  }
  if (!val.empty()) m = std::move(best);
  return res;
}

inline void append_mlp(const MlpModel& m, Blob& b) {
  b.meta["sizes"] = m.sizes;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    b.arrays["mlp.w" + std::to_string(i)] = std::vector<double>(l.w.data(), l.w.data() + l.w.size());
    b.arrays["mlp.b" + std::to_string(i)] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
  }
}

inline MlpModel read_mlp(const Blob& b) {
  std::vector<std::size_t> sizes;
  try {
    sizes = b.meta.at("sizes").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad network metadata: ") + e.what());
  }
  MlpModel m = make_mlp(sizes, 0, true);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& w = b.array("mlp.w" + std::to_string(i));
    const auto& bias = b.array("mlp.b" + std::to_string(i));
    if (w.size() != static_cast<std::size_t>(m.layers[i].w.size()) ||
        bias.size() != static_cast<std::size_t>(m.layers[i].b.size())) {
      throw DataError("network layer " + std::to_string(i) + " has the wrong size");
    }
    std::copy(w.begin(), w.end(), m.layers[i].w.data());
    std::copy(bias.begin(), bias.end(), m.layers[i].b.data());
  }
  return m;
}

}  // namespace avivis
