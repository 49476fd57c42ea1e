#pragma once
// Gradient-boosted regression trees on the binary logistic loss, used only
// for gain-based feature ranking. Second-order split gain with L2 leaf
// penalty; trees are grown level by level over presorted columns.

#include <cmath>
#include <span>
#include <vector>

#include "avivis/featstore.hpp"

namespace avivis {

struct GbdtParams {
  int rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double lambda = 1.0;            // L2 penalty on leaf weights
  double min_child_weight = 1.0;  // minimum hessian sum per child
};

struct GbdtBinaryResult {
  std::vector<double> gain;          // total split gain per column
  std::vector<double> loss_history;  // mean training log-loss; [0] before the first round
};

/// Train-row order of each column, ascending by value (stable on ties).
inline std::vector<std::vector<std::size_t>> presort_columns(const FeatureMatrix& x, std::span<const std::size_t> train) {
  std::vector<std::vector<std::size_t>> order(x.cols);
  for (std::size_t c = 0; c < x.cols; ++c) {
    auto& o = order[c];
    o.resize(train.size());
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = i;
    std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return x.at(train[a], c) < x.at(train[b], c); });
  }
  return order;
}

inline double logistic(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

inline double mean_log_loss(std::span<const double> score, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    // log(1 + e^z) - y z, computed stably
    const double z = score[i];
    s += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y[i] * z;
  }
  return s / static_cast<double>(score.size());
}

/// Boosts one binary problem. `y` holds 0/1 targets aligned with `train`.
inline GbdtBinaryResult gbdt_binary(const FeatureMatrix& x, std::span<const std::size_t> train, std::span<const double> y,
                                    const GbdtParams& p, const std::vector<std::vector<std::size_t>>& order) {
  const std::size_t n = train.size();
  GbdtBinaryResult out;
  out.gain.assign(x.cols, 0.0);
  double pos = 0.0;
  for (double v : y) pos += v;
  const double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  std::vector<double> score(n, std::log(prior / (1.0 - prior)));
  std::vector<double> g(n), h(n);
  std::vector<int> node(n);
  out.loss_history.push_back(mean_log_loss(score, y));

  struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  for (int round = 0; round < p.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pr = logistic(score[i]);
      g[i] = pr - y[i];
      h[i] = pr * (1.0 - pr);
    }
    std::fill(node.begin(), node.end(), 0);
    int n_nodes = 1;  // nodes of the current level are numbered 0..n_nodes-1
    std::vector<double> leaf_value;
    for (int depth = 0;; ++depth) {
      std::vector<double> G(static_cast<std::size_t>(n_nodes), 0.0), H(static_cast<std::size_t>(n_nodes), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (node[i] < 0) continue;
        G[static_cast<std::size_t>(node[i])] += g[i];
        H[static_cast<std::size_t>(node[i])] += h[i];
      }
      std::vector<Split> best(static_cast<std::size_t>(n_nodes));
      if (depth < p.max_depth) {
        std::vector<double> gl(static_cast<std::size_t>(n_nodes)), hl(static_cast<std::size_t>(n_nodes)),
            last(static_cast<std::size_t>(n_nodes));
        std::vector<char> seen(static_cast<std::size_t>(n_nodes));
        for (std::size_t c = 0; c < x.cols; ++c) {
          std::fill(gl.begin(), gl.end(), 0.0);
          std::fill(hl.begin(), hl.end(), 0.0);
          std::fill(seen.begin(), seen.end(), 0);
          for (std::size_t i : order[c]) {
            if (node[i] < 0) continue;
            const auto k = static_cast<std::size_t>(node[i]);
            const double v = x.at(train[i], c);
            if (seen[k] && v > last[k]) {
              const double gr = G[k] - gl[k], hr = H[k] - hl[k];
              if (hl[k] >= p.min_child_weight && hr >= p.min_child_weight) {
                const double gain = 0.5 * (gl[k] * gl[k] / (hl[k] + p.lambda) + gr * gr / (hr + p.lambda) -
                                           G[k] * G[k] / (H[k] + p.lambda));
                if (gain > best[k].gain + 1e-12) best[k] = {gain, static_cast<int>(c), 0.5 * (last[k] + v)};
              }
            }
            seen[k] = 1;
            last[k] = v;
            gl[k] += g[i];
            hl[k] += h[i];
          }
        }
      }
      // Nodes without a split become leaves; the rest spawn two children.
      std::vector<int> child(static_cast<std::size_t>(n_nodes), -1);
      int next = 0;
      for (int k = 0; k < n_nodes; ++k) {
        const auto& b = best[static_cast<std::size_t>(k)];
        if (b.feature >= 0) {
          child[static_cast<std::size_t>(k)] = next;
          next += 2;
          out.gain[static_cast<std::size_t>(b.feature)] += b.gain;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (node[i] < 0) continue;
        const auto k = static_cast<std::size_t>(node[i]);
        if (child[k] < 0) {
          score[i] += p.learning_rate * (-G[k] / (H[k] + p.lambda));
          node[i] = -1;
        } else {
          node[i] = child[k] + (x.at(train[i], static_cast<std::size_t>(best[k].feature)) <= best[k].threshold ? 0 : 1);
        }
      }
      if (next == 0) break;
      n_nodes = next;
    }
    out.loss_history.push_back(mean_log_loss(score, y));
  }
  return out;
}

/// One-vs-rest boosting; returns total split gain per column summed over
/// classes and rounds.
inline std::vector<double> gbdt_gain(const FeatureMatrix& x, std::span<const std::size_t> train, const GbdtParams& p,
                                     std::size_t jobs = 1) {
  if (train.empty()) throw UsageError("boosting needs training rows");
  const std::size_t n_classes = std::max<std::size_t>(x.num_classes(), count_classes(x.labels));
  const auto order = presort_columns(x, train);
  std::vector<std::vector<double>> per_class(n_classes);
  parallel_for(n_classes, jobs, [&](std::size_t c) {
    std::vector<double> y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) y[i] = x.labels[train[i]] == static_cast<int>(c) ? 1.0 : 0.0;
    per_class[c] = gbdt_binary(x, train, y, p, order).gain;
  });
  std::vector<double> gain(x.cols, 0.0);
  for (const auto& pc : per_class)
    for (std::size_t i = 0; i < x.cols; ++i) gain[i] += pc[i];
  return gain;
}

}  // namespace avivis
