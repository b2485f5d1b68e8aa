#pragma once

// Multinomial logistic regression trained by plain SGD on cross-entropy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

#include "dataset_matrix.hpp"

namespace pulsemark {

struct LogisticParams {
  double learning_rate = 0.01;
  std::size_t epochs = 200;
};

class LogisticRegression {
 public:
  static LogisticRegression fit(const TrainingData& data, const LogisticParams& params,
                                std::uint64_t seed) {
    data.validate();
    LogisticRegression m;
    m.scaler_ = Standardizer::fit(data.x);
    const std::size_t d = data.dims();
    m.weights_.assign(kLabelCount, std::vector<double>(d, 0.0));
    m.bias_.assign(kLabelCount, 0.0);

    std::vector<Row> z;
    z.reserve(data.size());
    for (const auto& r : data.x) z.push_back(m.scaler_.apply(r));

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        auto p = m.probabilities_scaled(z[i]);
        for (std::size_t k = 0; k < kLabelCount; ++k) {
          const double g = p[k] - (label_index(data.y[i]) == k ? 1.0 : 0.0);
          for (std::size_t j = 0; j < d; ++j) m.weights_[k][j] -= params.learning_rate * g * z[i][j];
          m.bias_[k] -= params.learning_rate * g;
        }
      }
    }
    return m;
  }

  std::array<double, kLabelCount> probabilities(const Row& x) const {
    return probabilities_scaled(scaler_.apply(x));
  }

  AnomalyLabel predict(const Row& x) const { return majority(probabilities(x)); }

  void save(std::ostream& os) const {
    os << "logistic\nmean ";
    detail::write_doubles(os, scaler_.mean);
    os << "sd ";
    detail::write_doubles(os, scaler_.sd);
    os << "bias ";
    detail::write_doubles(os, bias_);
    for (const auto& w : weights_) {
      os << "w ";
      detail::write_doubles(os, w);
    }
  }

  static LogisticRegression load(std::istream& is) {
    LogisticRegression m;
    detail::expect_token(is, "logistic");
    detail::expect_token(is, "mean");
    m.scaler_.mean = detail::read_doubles(is);
    detail::expect_token(is, "sd");
    m.scaler_.sd = detail::read_doubles(is);
    detail::expect_token(is, "bias");
    m.bias_ = detail::read_doubles(is);
    if (m.bias_.size() != kLabelCount) throw Error("logistic model: bad class count");
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      detail::expect_token(is, "w");
      m.weights_.push_back(detail::read_doubles(is));
      if (m.weights_.back().size() != m.scaler_.mean.size())
        throw Error("logistic model: weight/feature size mismatch");
    }
    return m;
  }

  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  std::array<double, kLabelCount> probabilities_scaled(const Row& z) const {
    std::array<double, kLabelCount> s{};
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      s[k] = bias_[k];
      for (std::size_t j = 0; j < z.size(); ++j) s[k] += weights_[k][j] * z[j];
    }
    const double mx = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (auto& v : s) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : s) v /= sum;
    return s;
  }

  Standardizer scaler_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

}  // namespace pulsemark
