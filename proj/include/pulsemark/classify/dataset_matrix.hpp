#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "../core.hpp"

namespace pulsemark {

using Row = std::vector<double>;

/// Labeled rows fed to the baseline classifiers.
struct TrainingData {
  std::vector<Row> x;
  std::vector<AnomalyLabel> y;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return x.empty() ? 0 : x.front().size(); }

  void validate() const {
    if (x.size() != y.size()) throw Error("training data: row/label count mismatch");
    if (x.empty()) throw Error("training data is empty");
    for (const auto& r : x)
      if (r.size() != dims()) throw Error("training data: ragged rows");
    std::array<bool, kLabelCount> seen{};
    for (auto l : y) seen[label_index(l)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
      throw Error("training data must contain at least two classes");
  }
};

/// Argmax over per-label counts; ties go to the lexicographically smaller label.
template <typename Count>
AnomalyLabel majority(const std::array<Count, kLabelCount>& counts) {
  std::size_t best = kLabelCount;
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    if (best == kLabelCount || counts[l] > counts[best] ||
        (counts[l] == counts[best] && label_name_less(kAllLabels[l], kAllLabels[best])))
      best = l;
  }
  return kAllLabels[best];
}

namespace detail {

// Text serialization helpers shared by the model files.
inline void write_doubles(std::ostream& os, const std::vector<double>& v) {
  os << v.size();
  for (double d : v) os << ' ' << format_g(d, 17);
  os << '\n';
}

inline std::vector<double> read_doubles(std::istream& is) {
  std::size_t n = 0;
  if (!(is >> n)) throw Error("model file: expected vector length");
  std::vector<double> v(n);
  for (auto& d : v) {
    std::string tok;
    if (!(is >> tok)) throw Error("model file: truncated vector");
    auto p = parse_number<double>(tok);
    if (!p) throw Error("model file: bad number '" + tok + "'");
    d = *p;
  }
  return v;
}

inline void expect_token(std::istream& is, const std::string& want) {
  std::string tok;
  if (!(is >> tok) || tok != want)
    throw Error("model file: expected '" + want + "', got '" + tok + "'");
}

}  // namespace detail

/// Per-feature z-score parameters frozen at fit time.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  static Standardizer fit(const std::vector<Row>& x) {
    const std::size_t d = x.front().size();
    const double n = static_cast<double>(x.size());
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& r : x)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j] / n;
    for (const auto& r : x)
      for (std::size_t j = 0; j < d; ++j) s.sd[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]) / n;
    for (auto& v : s.sd) v = v > 0.0 ? std::sqrt(v) : 1.0;
    return s;
  }

  Row apply(const Row& r) const {
    Row out(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) out[j] = (r[j] - mean[j]) / sd[j];
    return out;
  }
};

}  // namespace pulsemark
