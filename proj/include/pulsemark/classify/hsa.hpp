#pragma once

// Heartbeat sequence analysis: k-nearest-neighbour classification of raw
// heart-rate series under band-constrained DTW, with LB_Keogh pruning, plus
// the healthy per-workload prototypes used as feature references.

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "../core.hpp"
#include "../similarity.hpp"

namespace pulsemark {

using PrototypeMap = std::map<std::string, HeartbeatSequence>;

/// DTW medoid of each workload's Normal traces (tie: smallest trace_id).
/// Distance from trace i to trace j resamples j onto i's length.
inline PrototypeMap fit_prototypes(std::span<const LabeledTrace> train, CostKind cost,
                                   BandPolicy band) {
  std::map<std::string, std::vector<const LabeledTrace*>> normals;
  std::set<std::string> workloads;
  for (const auto& tr : train) {
    workloads.insert(tr.workload_id);
    if (tr.label == AnomalyLabel::Normal) normals[tr.workload_id].push_back(&tr);
  }
  PrototypeMap out;
  for (const auto& wl : workloads) {
    auto it = normals.find(wl);
    if (it == normals.end()) throw Error("workload '" + wl + "' has no Normal training traces");
    auto& group = it->second;
    std::sort(group.begin(), group.end(),
              [](auto* a, auto* b) { return a->trace_id() < b->trace_id(); });
    std::vector<std::vector<double>> rates;
    for (auto* tr : group) rates.push_back(tr->sequence.rates());
    std::size_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < group.size(); ++i) {
      const std::size_t w = band.resolve(rates[i].size());
      double sum = 0.0;
      for (std::size_t j = 0; j < group.size(); ++j)
        if (j != i) sum += dtw(rates[i], resample_rates(rates[j], rates[i].size()), cost, w);
      if (sum < best_sum) {
        best_sum = sum;
        best = i;
      }
    }
    out.emplace(wl, group[best]->sequence);
  }
  return out;
}

class HsaModel {
 public:
  HsaModel() = default;

  HsaModel(std::vector<LabeledTrace> training, PrototypeMap prototypes, CostKind cost,
           BandPolicy band, std::size_t k)
      : training_(std::move(training)), prototypes_(std::move(prototypes)), cost_(cost),
        band_(band), k_(k) {
    if (training_.empty()) throw Error("HSA model needs training traces");
    if (k_ < 1 || k_ % 2 == 0) throw Error("k_neighbors must be odd and >= 1");
    for (const auto& tr : training_) {
      if (!prototypes_.count(tr.workload_id))
        throw Error("workload '" + tr.workload_id + "' has no prototype");
      rates_.push_back(tr.sequence.rates());
      ids_.push_back(tr.trace_id());
    }
    reference_length_ = 0;
    for (const auto& [wl, seq] : prototypes_) reference_length_ = std::max(reference_length_, seq.size());
  }

  const std::vector<LabeledTrace>& training() const { return training_; }
  const PrototypeMap& prototypes() const { return prototypes_; }
  CostKind cost() const { return cost_; }
  BandPolicy band() const { return band_; }
  std::size_t k() const { return k_; }
  /// Length online windows are resampled to before classification.
  std::size_t reference_length() const { return reference_length_; }

  const std::vector<std::vector<double>>& training_rates() const { return rates_; }
  const std::vector<std::string>& training_ids() const { return ids_; }

 private:
  std::vector<LabeledTrace> training_;
  PrototypeMap prototypes_;
  CostKind cost_ = CostKind::Squared;
  BandPolicy band_{};
  std::size_t k_ = 1;
  std::size_t reference_length_ = 0;
  std::vector<std::vector<double>> rates_;
  std::vector<std::string> ids_;
};

inline HsaModel fit_hsa(std::span<const LabeledTrace> train, CostKind cost = CostKind::Squared,
                        BandPolicy band = {}, std::size_t k = 1) {
  if (train.empty()) throw Error("fit_hsa: empty training set");
  auto protos = fit_prototypes(train, cost, band);
  return {std::vector<LabeledTrace>(train.begin(), train.end()), std::move(protos), cost, band, k};
}

struct HsaPrediction {
  AnomalyLabel label = AnomalyLabel::Normal;
  double distance = 0.0;  // DTW to the nearest training trace
  std::size_t pruned_count = 0;
};

/// Majority vote of the k nearest neighbours; ties go to the label with the
/// smaller mean distance, then to the lexicographically smaller label.
inline AnomalyLabel vote(std::span<const Neighbor> neighbors, std::span<const LabeledTrace> training) {
  std::array<std::size_t, kLabelCount> count{};
  std::array<double, kLabelCount> dist{};
  for (const auto& nb : neighbors) {
    auto l = label_index(training[nb.index].label);
    ++count[l];
    dist[l] += nb.distance;
  }
  std::optional<std::size_t> best;
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    if (count[l] == 0) continue;
    if (!best) {
      best = l;
      continue;
    }
    const double mean_l = dist[l] / static_cast<double>(count[l]);
    const double mean_b = dist[*best] / static_cast<double>(count[*best]);
    if (count[l] > count[*best] || (count[l] == count[*best] && mean_l < mean_b) ||
        (count[l] == count[*best] && mean_l == mean_b && label_name_less(kAllLabels[l], kAllLabels[*best])))
      best = l;
  }
  return kAllLabels[*best];
}

inline HsaPrediction predict_hsa(const HsaModel& model, std::span<const double> query_rates) {
  auto res = knn_search(query_rates, model.training_rates(), model.training_ids(), model.k(),
                        model.cost(), model.band());
  return {vote(res.neighbors, model.training()), res.neighbors.front().distance, res.pruned_count};
}

inline HsaPrediction predict_hsa(const HsaModel& model, const HeartbeatSequence& query) {
  return predict_hsa(model, query.rates());
}

}  // namespace pulsemark
