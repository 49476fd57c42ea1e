#pragma once
// RBF support vector machine, one-vs-rest over standardized features.
// Each binary dual is solved by SMO with maximal-violating-pair selection.

#include <cmath>
#include <span>
#include <vector>

#include "avivis/blob.hpp"
#include "avivis/featstore.hpp"

namespace avivis {

struct SvmParams {
  double gamma = 0.1;
  double C = 1.0;
  double tol = 1e-3;
  // 0 means max(10 * N, 10000) iterations per binary problem.
  std::size_t max_iter = 0;
  std::size_t jobs = 1;
};

struct SvmBinary {
  std::vector<double> alpha;  // per training row, in [0, C]
  double bias = 0.0;          // f(x) = sum alpha_i y_i K(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = false;
};

/// Solves min 1/2 a'Qa - e'a s.t. 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
/// `kernel` is the dense n x n kernel matrix.
inline SvmBinary smo_solve(std::span<const float> kernel, std::span<const double> y, double C, double tol,
                           std::size_t max_iter) {
  const std::size_t n = y.size();
  auto K = [&](std::size_t i, std::size_t j) { return static_cast<double>(kernel[i * n + j]); };
  SvmBinary s;
  s.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q a - e
  auto& a = s.alpha;
  auto up = [&](std::size_t t) { return (y[t] > 0 && a[t] < C) || (y[t] < 0 && a[t] > 0); };
  auto low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < C); };
  for (s.iterations = 0; s.iterations < max_iter; ++s.iterations) {
    std::size_t i = n, j = n;
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < tol) {
      s.converged = true;
      break;
    }
    const double Qii = K(i, i), Qjj = K(j, j), Qij = y[i] * y[j] * K(i, j);
    const double ai = a[i], aj = a[j];
    if (y[i] != y[j]) {
      double quad = Qii + Qjj + 2.0 * Qij;
      if (quad <= 0) quad = 1e-12;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = C - diff;
        }
      } else if (a[j] > C) {
        a[j] = C;
        a[i] = C + diff;
      }
    } else {
      double quad = Qii + Qjj - 2.0 * Qij;
      if (quad <= 0) quad = 1e-12;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = sum - C;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) {
          a[j] = C;
          a[i] = sum - C;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }
    const double di = a[i] - ai, dj = a[j] - aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (y[i] * K(t, i) * di + y[j] * K(t, j) * dj);
  }
  // Bias from free vectors; midpoint of the feasible interval otherwise.
  double sum = 0.0, ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] > 0 && a[t] < C) {
      sum += yg;
      ++free;
    } else if ((a[t] >= C && y[t] < 0) || (a[t] <= 0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = free > 0 ? sum / static_cast<double>(free) : 0.5 * (ub + lb);
  s.bias = -(std::isfinite(rho) ? rho : 0.0);
  return s;
}

struct SvmModel {
  double gamma = 0.1;
  double C = 1.0;
  std::vector<double> mean, scale;    // standardization, per input column
  std::size_t dim = 0;
  std::vector<double> support;        // n_sv x dim standardized rows
  std::vector<double> coef;           // n_classes x n_sv, alpha * y (0 where unused by that class)
  std::vector<double> bias;           // n_classes

  std::size_t n_classes() const { return bias.size(); }
  std::size_t n_support() const { return dim == 0 ? 0 : support.size() / dim; }

  std::vector<double> decision(std::span<const double> row) const {
    std::vector<double> z(dim);
    for (std::size_t c = 0; c < dim; ++c) z[c] = (row[c] - mean[c]) / scale[c];
    const std::size_t nsv = n_support();
    std::vector<double> k(nsv);
    for (std::size_t s = 0; s < nsv; ++s) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = z[c] - support[s * dim + c];
        d2 += d * d;
      }
      k[s] = std::exp(-gamma * d2);
    }
    std::vector<double> f(bias);
    for (std::size_t cl = 0; cl < f.size(); ++cl)
      for (std::size_t s = 0; s < nsv; ++s) f[cl] += coef[cl * nsv + s] * k[s];
    return f;
  }

  int predict(std::span<const double> row) const {
    const auto f = decision(row);
    return static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
  }
};

struct SvmTrainResult {
  SvmModel model;
  std::vector<SvmBinary> binaries;  // per class, alpha aligned with the training rows
  std::vector<std::string> warnings;
};

inline SvmTrainResult train_svm(const FeatureMatrix& x, std::span<const std::size_t> train, const SvmParams& p) {
  if (train.empty()) throw UsageError("SVM training needs rows");
  if (!(p.gamma > 0) || !(p.C > 0)) throw UsageError("SVM gamma and C must be positive");
  const std::size_t n = train.size(), d = x.cols;
  const std::size_t n_classes = std::max<std::size_t>(x.num_classes(), count_classes(x.labels));
  SvmTrainResult res;
  SvmModel& m = res.model;
  m.gamma = p.gamma;
  m.C = p.C;
  m.dim = d;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (std::size_t r : train)
    for (std::size_t c = 0; c < d; ++c) m.mean[c] += x.at(r, c);
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (std::size_t r : train)
    for (std::size_t c = 0; c < d; ++c) m.scale[c] += (x.at(r, c) - m.mean[c]) * (x.at(r, c) - m.mean[c]);
  for (auto& v : m.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;
  }
  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) z[i * d + c] = (x.at(train[i], c) - m.mean[c]) / m.scale[c];

  std::vector<float> kernel(n * n);
  parallel_for(n, p.jobs, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double t = z[i * d + c] - z[j * d + c];
        d2 += t * t;
      }
      kernel[i * n + j] = static_cast<float>(std::exp(-p.gamma * d2));
    }
  });

  const std::size_t max_iter = p.max_iter ? p.max_iter : std::max<std::size_t>(10 * n, 10000);
  res.binaries.resize(n_classes);
  parallel_for(n_classes, p.jobs, [&](std::size_t cl) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x.labels[train[i]] == static_cast<int>(cl) ? 1.0 : -1.0;
    res.binaries[cl] = smo_solve(kernel, y, p.C, p.tol, max_iter);
  });

  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i) {
    bool used = false;
    for (const auto& b : res.binaries) used = used || b.alpha[i] != 0.0;
    if (used) sv.push_back(i);
  }
  m.support.resize(sv.size() * d);
  for (std::size_t s = 0; s < sv.size(); ++s) std::copy_n(z.data() + sv[s] * d, d, m.support.data() + s * d);
  m.coef.assign(n_classes * sv.size(), 0.0);
  m.bias.resize(n_classes);
  for (std::size_t cl = 0; cl < n_classes; ++cl) {
    auto& b = res.binaries[cl];
    for (std::size_t s = 0; s < sv.size(); ++s) {
      const double y = x.labels[train[sv[s]]] == static_cast<int>(cl) ? 1.0 : -1.0;
      m.coef[cl * sv.size() + s] = y * b.alpha[sv[s]];
    }
    m.bias[cl] = b.bias;
    if (!b.converged) {
      res.warnings.push_back("SVM class " + std::to_string(cl) + " stopped at the iteration cap (" +
                             std::to_string(max_iter) + ")");
    }
  }
  return res;
}

struct SvmGridCell {
  double gamma = 0.0;
  double C = 0.0;
  double accuracy = 0.0;  // mean over folds
};

/// Stratified k-fold search over (gamma, C) using training rows only.
/// Returns every cell; the best is the highest accuracy, first on ties.
inline std::vector<SvmGridCell> svm_grid_search(const FeatureMatrix& x, std::span<const std::size_t> train,
                                                std::span<const double> gammas, std::span<const double> Cs,
                                                std::size_t folds, std::uint64_t seed, std::size_t jobs = 1) {
  std::vector<int> sub_labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) sub_labels[i] = x.labels[train[i]];
  const auto splits = kfold(sub_labels, folds, seed);
  std::vector<SvmGridCell> cells;
  for (double g : gammas)
    for (double c : Cs) cells.push_back({g, c, 0.0});
  parallel_for(cells.size(), jobs, [&](std::size_t k) {
    double acc = 0.0;
    for (const auto& f : splits) {
      std::vector<std::size_t> tr, te;
      for (auto i : f.train) tr.push_back(train[i]);
      for (auto i : f.test) te.push_back(train[i]);
      SvmParams p;
      p.gamma = cells[k].gamma;
      p.C = cells[k].C;
      const auto model = train_svm(x, tr, p).model;
      std::size_t ok = 0;
      for (auto r : te) ok += model.predict(x.row(r)) == x.labels[r] ? 1 : 0;
      acc += static_cast<double>(ok) / static_cast<double>(te.size());
    }
    cells[k].accuracy = acc / static_cast<double>(splits.size());
  });
  return cells;
}

inline void append_svm(const SvmModel& m, Blob& b) {
  b.meta["gamma"] = m.gamma;
  b.meta["C"] = m.C;
  b.meta["dim"] = m.dim;
  b.arrays["svm.mean"] = m.mean;
  b.arrays["svm.scale"] = m.scale;
  b.arrays["svm.support"] = m.support;
  b.arrays["svm.coef"] = m.coef;
  b.arrays["svm.bias"] = m.bias;
}

inline SvmModel read_svm(const Blob& b) {
  SvmModel m;
  try {
    m.gamma = b.meta.at("gamma").get<double>();
    m.C = b.meta.at("C").get<double>();
    m.dim = b.meta.at("dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad SVM metadata: ") + e.what());
  }
  m.mean = b.array("svm.mean");
  m.scale = b.array("svm.scale");
  m.support = b.array("svm.support");
  m.coef = b.array("svm.coef");
  m.bias = b.array("svm.bias");
  if (m.mean.size() != m.dim || m.scale.size() != m.dim || (m.dim && m.support.size() % m.dim) ||
      m.coef.size() != m.bias.size() * m.n_support()) {
    throw DataError("corrupt SVM arrays");
  }
  return m;
}

}  // namespace avivis
