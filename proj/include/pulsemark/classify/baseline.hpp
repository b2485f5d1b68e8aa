#pragma once

// Uniform front for the feature-vector baselines.

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>

#include "../features.hpp"
#include "decision_tree.hpp"
#include "logistic.hpp"
#include "naive_bayes.hpp"

namespace pulsemark {

enum class BaselineKind : std::uint8_t { LogisticRegressionSGD, GaussianNaiveBayes, DecisionTree, RandomForest };

inline constexpr BaselineKind kAllBaselines[] = {BaselineKind::LogisticRegressionSGD,
                                                 BaselineKind::GaussianNaiveBayes,
                                                 BaselineKind::DecisionTree, BaselineKind::RandomForest};

/// Short method names used in reports and on the command line.
inline std::string_view short_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::LogisticRegressionSGD: return "LR";
    case BaselineKind::GaussianNaiveBayes: return "NB";
    case BaselineKind::DecisionTree: return "DT";
    case BaselineKind::RandomForest: return "RF";
  }
  return "LR";
}

inline std::optional<BaselineKind> parse_baseline(std::string_view s) {
  for (auto k : kAllBaselines)
    if (short_name(k) == s) return k;
  return std::nullopt;
}

struct BaselineHyper {
  LogisticParams logistic{};
  TreeParams tree{};
  ForestParams forest{};
};

inline Row to_row(const FeatureVector& fv) {
  auto v = fv.values();
  return {v.begin(), v.end()};
}

class BaselineModel {
 public:
  using Impl = std::variant<LogisticRegression, GaussianNaiveBayes, DecisionTree, RandomForest>;

  BaselineModel(BaselineKind kind, Impl impl) : kind_(kind), impl_(std::move(impl)) {}

  BaselineKind kind() const { return kind_; }
  const Impl& impl() const { return impl_; }

  AnomalyLabel predict(const Row& x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, impl_);
  }
  AnomalyLabel predict(const FeatureVector& fv) const { return predict(to_row(fv)); }

  void save(std::ostream& os) const {
    os << "baseline " << short_name(kind_) << '\n';
    std::visit([&](const auto& m) { m.save(os); }, impl_);
  }

  static BaselineModel load(std::istream& is) {
    detail::expect_token(is, "baseline");
    std::string name;
    is >> name;
    auto kind = parse_baseline(name);
    if (!kind) throw Error("unknown baseline kind '" + name + "'");
    switch (*kind) {
      case BaselineKind::LogisticRegressionSGD: return {*kind, LogisticRegression::load(is)};
      case BaselineKind::GaussianNaiveBayes: return {*kind, GaussianNaiveBayes::load(is)};
      case BaselineKind::DecisionTree: return {*kind, DecisionTree::load(is)};
      case BaselineKind::RandomForest: return {*kind, RandomForest::load(is)};
    }
    throw Error("unknown baseline kind");
  }

 private:
  BaselineKind kind_;
  Impl impl_;
};

/// Only logistic regression standardizes its inputs; the others see raw features.
inline BaselineModel fit_baseline(BaselineKind kind, const TrainingData& data,
                                  const BaselineHyper& hyper = {}, std::uint64_t seed = 0) {
  data.validate();
  switch (kind) {
    case BaselineKind::LogisticRegressionSGD:
      return {kind, LogisticRegression::fit(data, hyper.logistic, seed)};
    case BaselineKind::GaussianNaiveBayes:
      return {kind, GaussianNaiveBayes::fit(data)};
    case BaselineKind::DecisionTree:
      return {kind, DecisionTree::fit(data, hyper.tree, seed)};
    case BaselineKind::RandomForest:
      return {kind, RandomForest::fit(data, hyper.forest, seed)};
  }
  throw Error("unknown baseline kind");
}

inline BaselineModel fit_baseline(BaselineKind kind,
                                  std::span<const std::pair<FeatureVector, AnomalyLabel>> features,
                                  const BaselineHyper& hyper = {}, std::uint64_t seed = 0) {
  TrainingData data;
  for (const auto& [fv, label] : features) {
    data.x.push_back(to_row(fv));
    data.y.push_back(label);
  }
  return fit_baseline(kind, data, hyper, seed);
}

}  // namespace pulsemark
