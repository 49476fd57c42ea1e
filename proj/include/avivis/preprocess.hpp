#pragma once
// Min-max scaling and PCA. Both are fitted on training rows only.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "avivis/featstore.hpp"

namespace avivis {

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

inline ScalerParams fit_minmax(const FeatureMatrix& m, std::span<const std::size_t> train) {
  if (train.empty()) throw UsageError("min-max fit needs at least one training row");
  ScalerParams p;
  p.min.assign(m.cols, std::numeric_limits<double>::infinity());
  p.max.assign(m.cols, -std::numeric_limits<double>::infinity());
  for (std::size_t r : train) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double v = m.at(r, c);
      p.min[c] = std::min(p.min[c], v);
      p.max[c] = std::max(p.max[c], v);
    }
  }
  return p;
}

/// (x - min) / (max - min); constant columns map to 0. Values outside the
/// training range extrapolate linearly.
inline FeatureMatrix apply_minmax(const FeatureMatrix& m, const ScalerParams& p) {
  if (p.min.size() != m.cols) throw UsageError("scaler width does not match matrix");
  FeatureMatrix out = m;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double range = p.max[c] - p.min[c];
      out.at(r, c) = range > 0.0 ? (m.at(r, c) - p.min[c]) / range : 0.0;
    }
  }
  return out;
}

struct PcaModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> mean;                // dim
  std::vector<double> components;          // k x dim, row-major, orthonormal rows
  std::vector<double> explained_variance;  // k, non-increasing

  std::span<const double> component(std::size_t i) const { return {components.data() + i * dim, dim}; }
  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

namespace detail {

// Flip so the entry with the largest magnitude (first on ties) is positive.
inline void canonicalize_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (!v.empty() && v[best] < 0.0)
    for (auto& x : v) x = -x;
}

}  // namespace detail

/// Eigendecomposition of the training covariance (denominator n-1). When the
/// feature count exceeds the training row count the n x n Gram matrix is
/// decomposed instead and mapped back; both routes give the same subspace up
/// to component sign, which is then canonicalized.
inline PcaModel fit_pca(const FeatureMatrix& m, std::span<const std::size_t> train, std::size_t k) {
  const std::size_t n = train.size(), d = m.cols;
  if (n < 2) throw UsageError("PCA needs at least two training rows");
  if (k == 0 || k > std::min(d, n - 1)) {
    throw UsageError("PCA component count " + std::to_string(k) + " exceeds min(features, train rows - 1) = " +
                     std::to_string(std::min(d, n - 1)));
  }
  PcaModel model;
  model.k = k;
  model.dim = d;
  model.mean.assign(d, 0.0);
  for (std::size_t r : train)
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += m.at(r, c);
  for (auto& v : model.mean) v /= static_cast<double>(n);

  Eigen::MatrixXd xc(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      xc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = m.at(train[i], c) - model.mean[c];
  const double denom = static_cast<double>(n - 1);

  model.components.assign(k * d, 0.0);
  model.explained_variance.assign(k, 0.0);
  if (d <= n) {
    const Eigen::MatrixXd cov = (xc.transpose() * xc) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
    for (std::size_t i = 0; i < k; ++i) {
      const auto col = static_cast<Eigen::Index>(d - 1 - i);
      model.explained_variance[i] = std::max(0.0, es.eigenvalues()(col));
      for (std::size_t c = 0; c < d; ++c) model.components[i * d + c] = es.eigenvectors()(static_cast<Eigen::Index>(c), col);
    }
  } else {
    const Eigen::MatrixXd gram = (xc * xc.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
    const double top = std::max(es.eigenvalues()(static_cast<Eigen::Index>(n - 1)), 0.0);
    std::size_t filled = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto col = static_cast<Eigen::Index>(n - 1 - i);
      const double lambda = es.eigenvalues()(col);
      if (!(lambda > 1e-12 * std::max(top, 1e-300))) break;
      const Eigen::VectorXd v = xc.transpose() * es.eigenvectors().col(col) / std::sqrt(lambda * denom);
      model.explained_variance[i] = lambda;
      for (std::size_t c = 0; c < d; ++c) model.components[i * d + c] = v(static_cast<Eigen::Index>(c));
      ++filled;
    }
    // Rank-deficient data: complete the basis with zero-variance directions.
    for (std::size_t j = 0; filled < k && j < d; ++j) {
      std::vector<double> e(d, 0.0);
      e[j] = 1.0;
      for (std::size_t i = 0; i < filled; ++i) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += e[c] * model.components[i * d + c];
        for (std::size_t c = 0; c < d; ++c) e[c] -= dot * model.components[i * d + c];
      }
      double norm = 0.0;
      for (double x : e) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-6) continue;
      for (std::size_t c = 0; c < d; ++c) model.components[filled * d + c] = e[c] / norm;
      ++filled;
    }
  }
  for (std::size_t i = 0; i < k; ++i) detail::canonicalize_sign({model.components.data() + i * d, d});
  return model;
}

/// (x - mean) . components^T, one "PC" group of k columns.
inline FeatureMatrix project(const FeatureMatrix& m, const PcaModel& model) {
  if (m.cols != model.dim) throw UsageError("PCA dimension does not match matrix");
  FeatureMatrix out;
  out.rows = m.rows;
  out.cols = model.k;
  out.schema.append("PC", model.k);
  out.labels = m.labels;
  out.class_names = m.class_names;
  out.manifest_fingerprint = m.manifest_fingerprint;
  out.params_fingerprint = m.params_fingerprint;
  out.values.assign(out.rows * out.cols, 0.0);
  std::vector<double> centered(m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) centered[c] = m.at(r, c) - model.mean[c];
    for (std::size_t i = 0; i < model.k; ++i) {
      const double* comp = model.components.data() + i * model.dim;
      double s = 0.0;
      for (std::size_t c = 0; c < m.cols; ++c) s += centered[c] * comp[c];
      out.at(r, i) = s;
    }
  }
  return out;
}

/// Maps projected rows back to feature space (mean + scores . components).
inline std::vector<double> reconstruct(std::span<const double> scores, const PcaModel& model) {
  std::vector<double> x(model.mean);
  for (std::size_t i = 0; i < model.k; ++i)
    for (std::size_t c = 0; c < model.dim; ++c) x[c] += scores[i] * model.components[i * model.dim + c];
  return x;
}

}  // namespace avivis
