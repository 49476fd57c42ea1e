#pragma once
// Confusion matrix and per-class classification report.

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "avivis/common.hpp"

namespace avivis {

struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;  // row = true class, column = predicted

  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
  std::size_t total() const {
    std::size_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
  std::size_t row_sum(std::size_t t) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < n_classes; ++p) s += at(t, p);
    return s;
  }
  std::size_t col_sum(std::size_t p) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < n_classes; ++t) s += at(t, p);
    return s;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred, std::size_t n_classes) {
  if (truth.size() != pred.size()) throw UsageError("label lists differ in length");
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.counts.assign(n_classes * n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0 || static_cast<std::size_t>(truth[i]) >= n_classes ||
        static_cast<std::size_t>(pred[i]) >= n_classes) {
      throw UsageError("label outside 0..C-1");
    }
    ++cm.counts[static_cast<std::size_t>(truth[i]) * n_classes + static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  ClassMetrics macro;
  ClassMetrics weighted;
};

/// Zero denominators give 0 rather than NaN.
inline ClassReport classification_report(const ConfusionMatrix& cm) {
  ClassReport r;
  const std::size_t total = cm.total();
  std::size_t trace = 0;
  r.per_class.resize(cm.n_classes);
  for (std::size_t k = 0; k < cm.n_classes; ++k) {
    auto& m = r.per_class[k];
    const double tp = static_cast<double>(cm.at(k, k));
    const auto col = cm.col_sum(k), row = cm.row_sum(k);
    trace += cm.at(k, k);
    m.precision = col ? tp / static_cast<double>(col) : 0.0;
    m.recall = row ? tp / static_cast<double>(row) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.support = row;
  }
  r.accuracy = total ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
  r.macro.support = r.weighted.support = total;
  const double nc = static_cast<double>(std::max<std::size_t>(cm.n_classes, 1));
  for (const auto& m : r.per_class) {
    r.macro.precision += m.precision / nc;
    r.macro.recall += m.recall / nc;
    r.macro.f1 += m.f1 / nc;
    const double w = total ? static_cast<double>(m.support) / static_cast<double>(total) : 0.0;
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  return r;
}

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// CSV with one row per class followed by accuracy, macro avg and weighted avg.
inline std::string report_csv(const ClassReport& r, const std::vector<std::string>& class_names) {
  std::string s = "class,precision,recall,f1,support\n";
  auto line = [&](const std::string& name, const ClassMetrics& m) {
    s += name + "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.f1) + "," + std::to_string(m.support) + "\n";
  };
  for (std::size_t k = 0; k < r.per_class.size(); ++k)
    line(k < class_names.size() ? class_names[k] : std::to_string(k), r.per_class[k]);
  s += "accuracy,,," + fmt(r.accuracy) + "," + std::to_string(r.macro.support) + "\n";
  line("macro avg", r.macro);
  line("weighted avg", r.weighted);
  return s;
}

// Rows are true classes, columns predicted classes.
inline std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  auto name = [&](std::size_t k) { return k < class_names.size() ? class_names[k] : std::to_string(k); };
  std::string s = "true\\predicted";
  for (std::size_t p = 0; p < cm.n_classes; ++p) s += "," + name(p);
  s += "\n";
  for (std::size_t t = 0; t < cm.n_classes; ++t) {
    s += name(t);
    for (std::size_t p = 0; p < cm.n_classes; ++p) s += "," + std::to_string(cm.at(t, p));
    s += "\n";
  }
  return s;
}

}  // namespace avivis
