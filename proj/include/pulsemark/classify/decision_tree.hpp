#pragma once

// CART classification tree (Gini impurity) and a bagged random forest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>

#include "../synth.hpp"
#include "dataset_matrix.hpp"

namespace pulsemark {

struct TreeParams {
  std::size_t max_depth = 8;
  std::size_t min_leaf = 2;
  /// Features examined per split; 0 means all of them.
  std::size_t max_features = 0;
};

inline double gini(const std::array<std::size_t, kLabelCount>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double g = 1.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    g -= p * p;
  }
  return g;
}

class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    AnomalyLabel label = AnomalyLabel::Normal;
  };

  /// Fits on the rows listed in `rows` (repeats allowed, as in a bootstrap sample).
  static DecisionTree fit(const TrainingData& data, const std::vector<std::size_t>& rows,
                          const TreeParams& params, std::uint64_t seed) {
    data.validate();
    if (params.min_leaf < 1) throw Error("min_leaf must be >= 1");
    DecisionTree t;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx = rows;
    t.grow(data, idx, 0, params, rng);
    return t;
  }

  static DecisionTree fit(const TrainingData& data, const TreeParams& params = {},
                          std::uint64_t seed = 0) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    return fit(data, rows, params, seed);
  }

  AnomalyLabel predict(const Row& x) const {
    int at = 0;
    while (nodes_[at].feature >= 0)
      at = x[static_cast<std::size_t>(nodes_[at].feature)] <= nodes_[at].threshold ? nodes_[at].left
                                                                                   : nodes_[at].right;
    return nodes_[at].label;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  std::size_t depth() const { return depth_from(0); }

  void save(std::ostream& os) const {
    os << "tree " << nodes_.size() << '\n';
    for (const auto& n : nodes_)
      os << n.feature << ' ' << detail::format_g(n.threshold, 17) << ' ' << n.left << ' ' << n.right
         << ' ' << to_string(n.label) << '\n';
  }

  static DecisionTree load(std::istream& is) {
    detail::expect_token(is, "tree");
    std::size_t count = 0;
    if (!(is >> count) || count == 0) throw Error("tree model: bad node count");
    DecisionTree t;
    t.nodes_.resize(count);
    for (auto& n : t.nodes_) {
      std::string thr, label;
      if (!(is >> n.feature >> thr >> n.left >> n.right >> label)) throw Error("tree model: truncated");
      auto th = detail::parse_number<double>(thr);
      auto lb = parse_label(label);
      if (!th || !lb) throw Error("tree model: bad node");
      n.threshold = *th;
      n.label = *lb;
      auto bad = [&](int c) { return c < 0 || static_cast<std::size_t>(c) >= count; };
      if (n.feature >= 0 && (bad(n.left) || bad(n.right))) throw Error("tree model: bad child index");
    }
    return t;
  }

 private:
  std::size_t depth_from(int at) const {
    const auto& n = nodes_[static_cast<std::size_t>(at)];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  int grow(const TrainingData& data, std::vector<std::size_t>& idx, std::size_t depth,
           const TreeParams& params, std::mt19937_64& rng) {
    std::array<std::size_t, kLabelCount> counts{};
    for (auto i : idx) ++counts[label_index(data.y[i])];
    const int me = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[me].label = majority(counts);

    const std::size_t n = idx.size();
    const double parent = gini(counts, n);
    if (depth >= params.max_depth || parent == 0.0 || n < 2 * params.min_leaf) return me;

    const std::size_t d = data.dims();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (params.max_features > 0 && params.max_features < d) {
      // Partial Fisher-Yates; the chosen subset is then scanned in index order.
      for (std::size_t i = 0; i < params.max_features; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(features[i], features[pick(rng)]);
      }
      features.resize(params.max_features);
      std::sort(features.begin(), features.end());
    }

    struct Best {
      std::size_t feature;
      double threshold;
      double impurity;
    };
    std::optional<Best> best;
    std::vector<std::size_t> sorted = idx;
    for (auto f : features) {
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](auto a, auto b) { return data.x[a][f] < data.x[b][f]; });
      std::array<std::size_t, kLabelCount> left{};
      auto right = counts;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const auto l = label_index(data.y[sorted[pos]]);
        ++left[l];
        --right[l];
        const double lo = data.x[sorted[pos]][f];
        const double hi = data.x[sorted[pos + 1]][f];
        if (!(lo < hi)) continue;
        const std::size_t nl = pos + 1, nr = n - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double imp = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                           static_cast<double>(n);
        // Strict comparison keeps the lowest threshold (and lowest feature) among ties.
        if (!best || imp < best->impurity) best = Best{f, lo + (hi - lo) / 2.0, imp};
      }
    }
    if (!best || !(best->impurity < parent)) return me;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (data.x[i][best->feature] <= best->threshold ? li : ri).push_back(i);
    nodes_[me].feature = static_cast<int>(best->feature);
    nodes_[me].threshold = best->threshold;
    const int l = grow(data, li, depth + 1, params, rng);
    const int r = grow(data, ri, depth + 1, params, rng);
    nodes_[me].left = l;
    nodes_[me].right = r;
    return me;
  }

  std::vector<Node> nodes_;
};

struct ForestParams {
  std::size_t trees = 50;
  TreeParams tree{};  // max_features 0 here means ceil(sqrt(d))
};

class RandomForest {
 public:
  /// Tree t draws its bootstrap sample and split features from derive_seed(seed, t).
  static RandomForest fit(const TrainingData& data, const ForestParams& params, std::uint64_t seed) {
    data.validate();
    if (params.trees == 0) throw Error("random forest needs at least one tree");
    RandomForest f;
    TreeParams tp = params.tree;
    if (tp.max_features == 0)
      tp.max_features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.dims()))));
    for (std::size_t t = 0; t < params.trees; ++t) {
      std::mt19937_64 rng(derive_seed(seed, t));
      std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
      std::vector<std::size_t> rows(data.size());
      for (auto& r : rows) r = pick(rng);
      f.trees_.push_back(DecisionTree::fit(data, rows, tp, rng()));
    }
    return f;
  }

  AnomalyLabel predict(const Row& x) const {
    std::array<std::size_t, kLabelCount> votes{};
    for (const auto& t : trees_) ++votes[label_index(t.predict(x))];
    return majority(votes);
  }

  const std::vector<DecisionTree>& trees() const { return trees_; }

  void save(std::ostream& os) const {
    os << "forest " << trees_.size() << '\n';
    for (const auto& t : trees_) t.save(os);
  }

  static RandomForest load(std::istream& is) {
    detail::expect_token(is, "forest");
    std::size_t count = 0;
    if (!(is >> count) || count == 0) throw Error("forest model: bad tree count");
    RandomForest f;
    for (std::size_t t = 0; t < count; ++t) f.trees_.push_back(DecisionTree::load(is));
    return f;
  }

 private:
  std::vector<DecisionTree> trees_;
};

}  // namespace pulsemark
