#pragma once
// Column selectors fitted on training rows: ANOVA F, one-vs-rest lasso,
// forest impurity importance and boosted-tree gain.

#include <cfloat>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "avivis/blob.hpp"
#include "avivis/cart.hpp"
#include "avivis/gbdt.hpp"

namespace avivis {

enum class SelectorMethod { Gbdt, Lasso, Forest, KbestF, None };

inline const char* selector_name(SelectorMethod m) {
  switch (m) {
    case SelectorMethod::Gbdt: return "gbdt";
    case SelectorMethod::Lasso: return "lasso";
    case SelectorMethod::Forest: return "forest";
    case SelectorMethod::KbestF: return "kbest_f";
    case SelectorMethod::None: return "none";
  }
  return "?";
}

inline SelectorMethod parse_selector(const std::string& s) {
  for (auto m : {SelectorMethod::Gbdt, SelectorMethod::Lasso, SelectorMethod::Forest, SelectorMethod::KbestF,
                 SelectorMethod::None})
    if (s == selector_name(m)) return m;
  if (s == "xgboost") return SelectorMethod::Gbdt;
  if (s == "rf") return SelectorMethod::Forest;
  if (s == "kbest" || s == "skbest") return SelectorMethod::KbestF;
  throw UsageError("unknown selector '" + s + "' (gbdt, lasso, forest, kbest_f, none)");
}

struct SelectorReport {
  SelectorMethod method = SelectorMethod::None;
  std::vector<double> importances;   // one per input column
  std::vector<std::size_t> selected;  // top-k, descending importance
  std::size_t k = 0;
  std::vector<std::string> warnings;

  friend bool operator==(const SelectorReport& a, const SelectorReport& b) {
    return a.method == b.method && a.importances == b.importances && a.selected == b.selected && a.k == b.k;
  }
};

struct SelectorOptions {
  std::size_t forest_trees = 250;
  GbdtParams gbdt;
  double lasso_lambda = 1e-3;
  int lasso_max_sweeps = 1000;
  double lasso_tol = 1e-6;
  std::size_t jobs = 1;
};

namespace detail {

inline SelectorReport finish_report(SelectorMethod m, std::vector<double> imp, std::size_t k) {
  SelectorReport r;
  r.method = m;
  r.k = k;
  for (auto& v : imp)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite importance from ") + selector_name(m));
  r.selected = top_k_indices(imp, k);
  r.importances = std::move(imp);
  return r;
}

inline void require_train(const FeatureMatrix& m, std::span<const std::size_t> train) {
  if (train.empty()) throw UsageError("selector needs training rows");
  for (std::size_t r : train)
    if (r >= m.rows) throw UsageError("training index out of range");
}

}  // namespace detail

/// One-way ANOVA F per column. A column with zero within-class variance and
/// non-zero between-class variance scores DBL_MAX; fully constant columns 0.
inline std::vector<double> anova_f(const FeatureMatrix& m, std::span<const std::size_t> train) {
  const std::size_t n_classes = std::max<std::size_t>(m.num_classes(), count_classes(m.labels));
  std::vector<double> count(n_classes, 0.0);
  for (std::size_t r : train) count[static_cast<std::size_t>(m.labels[r])] += 1.0;
  std::size_t present = 0;
  for (double c : count) present += c > 0 ? 1 : 0;
  const double n = static_cast<double>(train.size());
  if (present < 2 || train.size() <= present) throw DataError("ANOVA F needs two classes and more rows than classes");
  std::vector<double> f(m.cols, 0.0);
  std::vector<double> class_mean(n_classes);
  for (std::size_t c = 0; c < m.cols; ++c) {
    std::fill(class_mean.begin(), class_mean.end(), 0.0);
    double mean = 0.0;
    for (std::size_t r : train) {
      class_mean[static_cast<std::size_t>(m.labels[r])] += m.at(r, c);
      mean += m.at(r, c);
    }
    mean /= n;
    double ssb = 0.0;
    for (std::size_t k = 0; k < n_classes; ++k) {
      if (count[k] == 0) continue;
      class_mean[k] /= count[k];
      ssb += count[k] * (class_mean[k] - mean) * (class_mean[k] - mean);
    }
    double ssw = 0.0;
    for (std::size_t r : train) {
      const double d = m.at(r, c) - class_mean[static_cast<std::size_t>(m.labels[r])];
      ssw += d * d;
    }
    const double between = ssb / static_cast<double>(present - 1);
    const double within = ssw / (n - static_cast<double>(present));
    if (within <= 0.0 || within < 1e-300) {
      f[c] = between > 0.0 ? DBL_MAX : 0.0;
    } else {
      f[c] = std::min(between / within, DBL_MAX);
    }
  }
  return f;
}

inline SelectorReport kbest_f(const FeatureMatrix& m, std::span<const std::size_t> train, std::size_t k) {
  detail::require_train(m, train);
  return detail::finish_report(SelectorMethod::KbestF, anova_f(m, train), k);
}

struct LassoFit {
  std::vector<double> coef;  // D
  double intercept = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// Minimizes (1/2n)|y - b0 - X b|^2 + lambda |b|_1 by cyclic coordinate
/// descent on centered data. Converged when no coefficient moves more than tol
/// in a sweep.
inline LassoFit lasso_fit(const FeatureMatrix& m, std::span<const std::size_t> train, std::span<const double> y,
                          double lambda, int max_sweeps, double tol) {
  const std::size_t n = train.size(), d = m.cols;
  const double dn = static_cast<double>(n);
  std::vector<double> xmean(d, 0.0);
  double ymean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ymean += y[i];
    for (std::size_t c = 0; c < d; ++c) xmean[c] += m.at(train[i], c);
  }
  ymean /= dn;
  for (auto& v : xmean) v /= dn;
  // Column-major centered copy for cache-friendly sweeps.
  std::vector<double> xc(n * d);
  std::vector<double> z(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = m.at(train[i], c) - xmean[c];
      xc[c * n + i] = v;
      z[c] += v * v;
    }
    z[c] /= dn;
  }
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ymean;
  LassoFit fit;
  fit.coef.assign(d, 0.0);
  for (fit.sweeps = 0; fit.sweeps < max_sweeps;) {
    ++fit.sweeps;
    double max_step = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      if (z[c] <= 1e-300) continue;
      const double* col = xc.data() + c * n;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * resid[i];
      rho = rho / dn + z[c] * fit.coef[c];
      const double shrunk = std::abs(rho) > lambda ? (rho > 0 ? rho - lambda : rho + lambda) : 0.0;
      const double next = shrunk / z[c];
      const double step = next - fit.coef[c];
      if (step != 0.0) {
        for (std::size_t i = 0; i < n; ++i) resid[i] -= step * col[i];
        fit.coef[c] = next;
      }
      max_step = std::max(max_step, std::abs(step));
    }
    if (max_step <= tol) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = ymean;
  for (std::size_t c = 0; c < d; ++c) fit.intercept -= fit.coef[c] * xmean[c];
  return fit;
}

/// Importance = max over one-vs-rest problems of |coefficient|.
inline SelectorReport lasso_select(const FeatureMatrix& m, std::span<const std::size_t> train, std::size_t k,
                                   double lambda = 1e-3, int max_sweeps = 1000, double tol = 1e-6) {
  detail::require_train(m, train);
  if (lambda < 0) throw UsageError("lasso lambda must be non-negative");
  const std::size_t n_classes = std::max<std::size_t>(m.num_classes(), count_classes(m.labels));
  std::vector<double> imp(m.cols, 0.0);
  std::vector<std::string> warnings;
  std::vector<double> y(train.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < train.size(); ++i) y[i] = m.labels[train[i]] == static_cast<int>(c) ? 1.0 : 0.0;
    const auto fit = lasso_fit(m, train, y, lambda, max_sweeps, tol);
    if (!fit.converged) {
      warnings.push_back("lasso for class " + std::to_string(c) + " did not converge in " +
                         std::to_string(max_sweeps) + " sweeps; using last iterate");
    }
    for (std::size_t j = 0; j < m.cols; ++j) imp[j] = std::max(imp[j], std::abs(fit.coef[j]));
  }
  auto r = detail::finish_report(SelectorMethod::Lasso, std::move(imp), k);
  r.warnings = std::move(warnings);
  return r;
}

inline SelectorReport forest_importance(const FeatureMatrix& m, std::span<const std::size_t> train, std::size_t k,
                                        std::size_t n_trees, std::uint64_t seed, std::size_t jobs = 1) {
  detail::require_train(m, train);
  ForestParams fp;
  fp.n_trees = n_trees;
  fp.jobs = jobs;
  const auto forest = train_forest(m, train, fp, derive_seed(seed, "selector"));
  return detail::finish_report(SelectorMethod::Forest, forest.feature_importance(), k);
}

inline SelectorReport gbdt_importance(const FeatureMatrix& m, std::span<const std::size_t> train, std::size_t k,
                                      const GbdtParams& params = {}, std::size_t jobs = 1) {
  detail::require_train(m, train);
  return detail::finish_report(SelectorMethod::Gbdt, gbdt_gain(m, train, params, jobs), k);
}

/// Identity selection, all columns in order.
inline SelectorReport no_selection(const FeatureMatrix& m) {
  SelectorReport r;
  r.method = SelectorMethod::None;
  r.k = m.cols;
  r.importances.assign(m.cols, 1.0);
  for (std::size_t i = 0; i < m.cols; ++i) r.selected.push_back(i);
  return r;
}

inline SelectorReport run_selector(SelectorMethod method, const FeatureMatrix& m, std::span<const std::size_t> train,
                                   std::size_t k, std::uint64_t seed, const SelectorOptions& opt = {}) {
  if (k == 0) throw UsageError("selector k must be positive");
  switch (method) {
    case SelectorMethod::Gbdt: return gbdt_importance(m, train, k, opt.gbdt, opt.jobs);
    case SelectorMethod::Lasso: return lasso_select(m, train, k, opt.lasso_lambda, opt.lasso_max_sweeps, opt.lasso_tol);
    case SelectorMethod::Forest: return forest_importance(m, train, k, opt.forest_trees, seed, opt.jobs);
    case SelectorMethod::KbestF: return kbest_f(m, train, k);
    case SelectorMethod::None: return no_selection(m);
  }
  throw UsageError("unhandled selector");
}

/// Keeps the selected columns, in selection order, as one "SEL" group.
inline FeatureMatrix apply_selection(const FeatureMatrix& m, const SelectorReport& r) {
  if (r.importances.size() != m.cols) throw UsageError("selector was fitted on a different column count");
  FeatureMatrix out = m;
  out.cols = r.selected.size();
  out.schema = {};
  out.schema.append("SEL", out.cols);
  out.values.assign(out.rows * out.cols, 0.0);
  for (std::size_t row = 0; row < m.rows; ++row)
    for (std::size_t j = 0; j < out.cols; ++j) out.values[row * out.cols + j] = m.at(row, r.selected[j]);
  return out;
}

inline void append_selector(const SelectorReport& r, Blob& b) {
  b.meta["selector"] = {{"method", selector_name(r.method)}, {"k", r.k}};
  b.arrays["selector.importances"] = r.importances;
  b.arrays["selector.selected"] = std::vector<double>(r.selected.begin(), r.selected.end());
}

inline SelectorReport read_selector(const Blob& b) {
  SelectorReport r;
  try {
    r.method = parse_selector(b.meta.at("selector").at("method").get<std::string>());
    r.k = b.meta.at("selector").at("k").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad selector metadata: ") + e.what());
  }
  r.importances = b.array("selector.importances");
  for (double v : b.array("selector.selected")) {
    if (v < 0 || v >= static_cast<double>(r.importances.size())) throw DataError("selected column out of range");
    r.selected.push_back(static_cast<std::size_t>(v));
  }
  return r;
}

}  // namespace avivis
