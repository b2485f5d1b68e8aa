#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "dataset_matrix.hpp"

namespace pulsemark {

/// Gaussian naive Bayes with a fixed variance floor.
class GaussianNaiveBayes {
 public:
  static constexpr double kVarianceFloor = 1e-9;

  static GaussianNaiveBayes fit(const TrainingData& data) {
    data.validate();
    const std::size_t d = data.dims();
    GaussianNaiveBayes m;
    m.prior_.assign(kLabelCount, 0.0);
    m.mean_.assign(kLabelCount, std::vector<double>(d, 0.0));
    m.var_.assign(kLabelCount, std::vector<double>(d, 0.0));
    std::array<std::size_t, kLabelCount> n{};
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto k = label_index(data.y[i]);
      ++n[k];
      for (std::size_t j = 0; j < d; ++j) m.mean_[k][j] += data.x[i][j];
    }
    for (std::size_t k = 0; k < kLabelCount; ++k)
      if (n[k])
        for (auto& v : m.mean_[k]) v /= static_cast<double>(n[k]);
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto k = label_index(data.y[i]);
      for (std::size_t j = 0; j < d; ++j) {
        double dv = data.x[i][j] - m.mean_[k][j];
        m.var_[k][j] += dv * dv;
      }
    }
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      m.prior_[k] = static_cast<double>(n[k]) / static_cast<double>(data.size());
      for (auto& v : m.var_[k]) v = std::max(n[k] ? v / static_cast<double>(n[k]) : 0.0, kVarianceFloor);
    }
    return m;
  }

  /// Unnormalized log posterior; -inf for classes absent from training.
  std::array<double, kLabelCount> log_posterior(const Row& x) const {
    std::array<double, kLabelCount> lp{};
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      if (prior_[k] == 0.0) {
        lp[k] = -std::numeric_limits<double>::infinity();
        continue;
      }
      double s = std::log(prior_[k]);
      for (std::size_t j = 0; j < x.size(); ++j) {
        double dv = x[j] - mean_[k][j];
        s -= 0.5 * (std::log(2.0 * std::numbers::pi * var_[k][j]) + dv * dv / var_[k][j]);
      }
      lp[k] = s;
    }
    return lp;
  }

  AnomalyLabel predict(const Row& x) const { return majority(log_posterior(x)); }

  void save(std::ostream& os) const {
    os << "naive_bayes\nprior ";
    detail::write_doubles(os, prior_);
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      os << "mean ";
      detail::write_doubles(os, mean_[k]);
      os << "var ";
      detail::write_doubles(os, var_[k]);
    }
  }

  static GaussianNaiveBayes load(std::istream& is) {
    GaussianNaiveBayes m;
    detail::expect_token(is, "naive_bayes");
    detail::expect_token(is, "prior");
    m.prior_ = detail::read_doubles(is);
    if (m.prior_.size() != kLabelCount) throw Error("naive bayes model: bad class count");
    for (std::size_t k = 0; k < kLabelCount; ++k) {
      detail::expect_token(is, "mean");
      m.mean_.push_back(detail::read_doubles(is));
      detail::expect_token(is, "var");
      m.var_.push_back(detail::read_doubles(is));
    }
    return m;
  }

  const std::vector<std::vector<double>>& means() const { return mean_; }
  const std::vector<std::vector<double>>& variances() const { return var_; }

 private:
  std::vector<double> prior_;
  std::vector<std::vector<double>> mean_;
  std::vector<std::vector<double>> var_;
};

}  // namespace pulsemark
