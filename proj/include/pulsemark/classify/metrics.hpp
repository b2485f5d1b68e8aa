#pragma once

#include <array>
#include <cstddef>
#include <numeric>
#include <span>

#include "../core.hpp"

namespace pulsemark {

/// Counts indexed by (true label, predicted label).
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kLabelCount>, kLabelCount> counts{};

  void add(AnomalyLabel truth, AnomalyLabel predicted) {
    ++counts[label_index(truth)][label_index(predicted)];
  }
  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return t;
  }
  std::size_t row_sum(std::size_t r) const {
    return std::accumulate(counts[r].begin(), counts[r].end(), std::size_t{0});
  }
  std::size_t col_sum(std::size_t c) const {
    std::size_t s = 0;
    for (const auto& row : counts) s += row[c];
    return s;
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (std::size_t i = 0; i < kLabelCount; ++i)
      for (std::size_t j = 0; j < kLabelCount; ++j) counts[i][j] += o.counts[i][j];
    return *this;
  }
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  double support = 0.0;  // true instances (averaged over repeats in evaluation)
};

struct EvalReport {
  std::array<ClassScores, kLabelCount> per_class{};
  double macro_f = 0.0;           // unweighted mean of per-class F
  double weighted_macro_f = 0.0;  // instance-weighted mean of per-class F
  double accuracy = 0.0;
  /// Fraction of anomalous instances predicted as any anomaly class.
  double anomaly_recall = 0.0;
  std::size_t repeats = 1;
};

inline double harmonic_f(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

/// Arithmetic mean of per-class F scores.
inline double macro_f(std::span<const double> per_class_f) {
  if (per_class_f.empty()) return 0.0;
  return std::accumulate(per_class_f.begin(), per_class_f.end(), 0.0) /
         static_cast<double>(per_class_f.size());
}

inline EvalReport metrics(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error("metrics: empty confusion matrix");
  EvalReport r;
  std::array<double, kLabelCount> fs{};
  std::size_t diag = 0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    const std::size_t tp = cm.counts[k][k];
    const std::size_t predicted = cm.col_sum(k);
    const std::size_t actual = cm.row_sum(k);
    auto& s = r.per_class[k];
    s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    s.f = harmonic_f(s.precision, s.recall);
    s.support = static_cast<double>(actual);
    fs[k] = s.f;
    diag += tp;
    weighted += s.f * static_cast<double>(actual);
  }
  r.macro_f = macro_f(fs);
  r.weighted_macro_f = weighted / static_cast<double>(total);
  r.accuracy = static_cast<double>(diag) / static_cast<double>(total);

  const std::size_t normal = label_index(AnomalyLabel::Normal);
  std::size_t anomalous = 0, detected = 0;
  for (std::size_t t = 0; t < kLabelCount; ++t) {
    if (t == normal) continue;
    anomalous += cm.row_sum(t);
    detected += cm.row_sum(t) - cm.counts[t][normal];
  }
  r.anomaly_recall = anomalous ? static_cast<double>(detected) / static_cast<double>(anomalous) : 0.0;
  return r;
}

/// Field-wise mean of several reports.
inline EvalReport average(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error("average: no reports");
  EvalReport out;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      out.per_class[k].precision += r.per_class[k].precision / n;
      out.per_class[k].recall += r.per_class[k].recall / n;
      out.per_class[k].f += r.per_class[k].f / n;
      out.per_class[k].support += r.per_class[k].support / n;
    }
    out.weighted_macro_f += r.weighted_macro_f / n;
    out.accuracy += r.accuracy / n;
    out.anomaly_recall += r.anomaly_recall / n;
  }
  std::array<double, kLabelCount> fs{};
  for (std::size_t k = 0; k < kLabelCount; ++k) fs[k] = out.per_class[k].f;
  // Keeps macro_f exactly the mean of the reported per-class F values.
  out.macro_f = macro_f(fs);
  out.repeats = reports.size();
  return out;
}

}  // namespace pulsemark
