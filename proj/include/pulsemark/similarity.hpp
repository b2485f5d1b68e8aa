#pragma once

// Dynamic time warping over heart-rate series, Sakoe-Chiba envelopes,
// the LB_Keogh lower bound and an exact pruned nearest-neighbour search.
//
// Recurrence (i indexes the reference Q, j the candidate C):
//   D(0,0) = 0
//   D(i,0) = cost(q_i, c_0) + D(i-1,0)
//   D(0,j) = cost(q_0, c_j) + D(0,j-1)
//   D(i,j) = cost(q_i, c_j) + min(D(i-1,j-1), D(i-1,j), D(i,j-1))
// The first cell carries no cost, so LB_Keogh skips index 0 as well; with
// that the bound holds for every band.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"

namespace pulsemark {

enum class CostKind : std::uint8_t { Absolute, Squared };

inline std::string_view to_string(CostKind c) { return c == CostKind::Absolute ? "abs" : "sq"; }

inline std::optional<CostKind> parse_cost(std::string_view s) {
  if (s == "abs") return CostKind::Absolute;
  if (s == "sq") return CostKind::Squared;
  return std::nullopt;
}

inline double pointwise_cost(double a, double b, CostKind kind) {
  double d = a - b;
  return kind == CostKind::Absolute ? std::fabs(d) : d * d;
}

/// Band width used when none is configured: max(5, ceil(0.1 * length)).
inline std::size_t default_band(std::size_t length) {
  return std::max<std::size_t>(5, (length + 9) / 10);
}

/// Band configuration carried by higher-level modules: a fixed width, or
/// the length-dependent default.
struct BandPolicy {
  std::optional<std::size_t> fixed;
  std::size_t resolve(std::size_t length) const { return fixed ? *fixed : default_band(length); }
  static BandPolicy automatic() { return {}; }
  static BandPolicy of(std::size_t w) { return {w}; }
  friend bool operator==(const BandPolicy&, const BandPolicy&) = default;
};

/// Accumulated warping cost at the final cell. `band` = nullopt is unconstrained.
inline double dtw(std::span<const double> q, std::span<const double> c, CostKind cost,
                  std::optional<std::size_t> band = std::nullopt) {
  const std::size_t n = q.size();
  const std::size_t m = c.size();
  if (n == 0 || m == 0) throw Error("dtw: empty input");
  const std::size_t diff = n > m ? n - m : m - n;
  if (band && *band < diff)
    throw Error("dtw: band " + std::to_string(*band) + " cannot reach the final cell (length gap " +
                std::to_string(diff) + ")");
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Two rolling rows over j; cells outside the band stay infinite.
  std::vector<double> prev(m, inf), curr(m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j_lo = 0, j_hi = m - 1;
    if (band) {
      j_lo = i > *band ? i - *band : 0;
      j_hi = std::min(m - 1, i + *band);
    }
    std::fill(curr.begin(), curr.end(), inf);
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      if (i == 0 && j == 0) {
        curr[0] = 0.0;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = prev[j - 1];
      if (i > 0) best = std::min(best, prev[j]);
      if (j > 0) best = std::min(best, curr[j - 1]);
      curr[j] = pointwise_cost(q[i], c[j], cost) + best;
    }
    std::swap(prev, curr);
  }
  return prev[m - 1];
}

struct Envelope {
  std::vector<double> upper;
  std::vector<double> lower;
  std::size_t w = 0;
};

/// Running max/min of q over [i - w, i + w], clamped to the sequence ends.
/// Monotone deques keep this O(n) for any w.
inline Envelope envelope(std::span<const double> q, std::size_t w) {
  const std::size_t n = q.size();
  Envelope env{std::vector<double>(n), std::vector<double>(n), w};
  std::deque<std::size_t> maxq, minq;
  std::size_t next = 0;  // next index to enter the window
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = (w >= n - 1 - i) ? n - 1 : i + w;
    while (next <= hi) {
      while (!maxq.empty() && q[maxq.back()] <= q[next]) maxq.pop_back();
      maxq.push_back(next);
      while (!minq.empty() && q[minq.back()] >= q[next]) minq.pop_back();
      minq.push_back(next);
      ++next;
    }
    const std::size_t lo = i > w ? i - w : 0;
    while (maxq.front() < lo) maxq.pop_front();
    while (minq.front() < lo) minq.pop_front();
    env.upper[i] = q[maxq.front()];
    env.lower[i] = q[minq.front()];
  }
  return env;
}

/// LB_Keogh of candidate c against a prebuilt envelope of the reference.
/// Index 0 is excluded: the first warping cell is free.
inline double lb_keogh(const Envelope& env, std::span<const double> c, CostKind cost) {
  if (c.size() != env.upper.size())
    throw Error("lb_keogh: length mismatch (" + std::to_string(env.upper.size()) + " vs " +
                std::to_string(c.size()) + ")");
  double sum = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] > env.upper[i])
      sum += pointwise_cost(c[i], env.upper[i], cost);
    else if (c[i] < env.lower[i])
      sum += pointwise_cost(c[i], env.lower[i], cost);
  }
  return sum;
}

inline double lb_keogh(std::span<const double> q, std::span<const double> c, std::size_t w,
                       CostKind cost) {
  if (q.size() != c.size())
    throw Error("lb_keogh: length mismatch (" + std::to_string(q.size()) + " vs " +
                std::to_string(c.size()) + ")");
  if (q.empty()) return 0.0;
  return lb_keogh(envelope(q, w), c, cost);
}

/// Linear interpolation of a rate series onto `length` evenly spaced index positions.
inline std::vector<double> resample_rates(std::span<const double> x, std::size_t length) {
  if (x.empty()) throw Error("resample_rates: empty input");
  if (length == 0) throw Error("resample_rates: target length must be >= 1");
  if (x.size() == length) return {x.begin(), x.end()};
  std::vector<double> out(length);
  if (length == 1) {
    out[0] = x[0];
    return out;
  }
  if (x.size() == 1) {
    std::fill(out.begin(), out.end(), x[0]);
    return out;
  }
  const double scale = static_cast<double>(x.size() - 1) / static_cast<double>(length - 1);
  for (std::size_t k = 0; k < length; ++k) {
    double pos = static_cast<double>(k) * scale;
    auto lo = static_cast<std::size_t>(pos);
    if (lo >= x.size() - 1) {
      out[k] = x.back();
      continue;
    }
    double frac = pos - static_cast<double>(lo);
    out[k] = x[lo] + (x[lo + 1] - x[lo]) * frac;
  }
  out.back() = x.back();
  return out;
}

struct Neighbor {
  std::size_t index = 0;  // position in the candidate list
  double distance = 0.0;
};

struct SearchResult {
  std::vector<Neighbor> neighbors;  // ascending (distance, trace_id)
  std::size_t pruned_count = 0;
};

/// k nearest candidates to `query` by banded DTW over rates. Candidates are
/// resampled onto the query length, visited in ascending LB_Keogh order, and
/// skipped once their bound can no longer beat the current k-th best.
/// Exact: the result matches an exhaustive scan, ties resolved by trace_id.
inline SearchResult knn_search(std::span<const double> query,
                               std::span<const std::vector<double>> candidate_rates,
                               std::span<const std::string> candidate_ids, std::size_t k,
                               CostKind cost, BandPolicy band) {
  if (candidate_rates.empty()) throw Error("nn_search: empty candidate list");
  if (candidate_ids.size() != candidate_rates.size())
    throw Error("nn_search: candidate id count mismatch");
  if (k == 0) throw Error("nn_search: k must be >= 1");
  if (query.empty()) throw Error("nn_search: empty query");
  const std::size_t n = query.size();
  const std::size_t w = band.resolve(n);
  const Envelope env = envelope(query, w);

  struct Entry {
    std::size_t index;
    std::vector<double> rates;
    double lb;
  };
  std::vector<Entry> entries;
  entries.reserve(candidate_rates.size());
  for (std::size_t i = 0; i < candidate_rates.size(); ++i) {
    auto r = resample_rates(candidate_rates[i], n);
    double lb = lb_keogh(env, r, cost);
    entries.push_back({i, std::move(r), lb});
  }
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.lb != b.lb) return a.lb < b.lb;
    return candidate_ids[a.index] < candidate_ids[b.index];
  });

  auto better = [&](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return candidate_ids[a.index] < candidate_ids[b.index];
  };

  SearchResult result;
  auto& best = result.neighbors;  // kept sorted, size <= k
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& entry = entries[e];
    if (best.size() == k) {
      const auto& worst = best.back();
      // A candidate with lb == worst.distance can only win on the id tie rule.
      if (entry.lb > worst.distance ||
          (entry.lb == worst.distance && candidate_ids[entry.index] > candidate_ids[worst.index])) {
        ++result.pruned_count;
        continue;
      }
    }
    double d = dtw(query, entry.rates, cost, w);
    Neighbor nb{entry.index, d};
    if (best.size() < k) {
      best.insert(std::upper_bound(best.begin(), best.end(), nb, better), nb);
    } else if (better(nb, best.back())) {
      best.pop_back();
      best.insert(std::upper_bound(best.begin(), best.end(), nb, better), nb);
    }
  }
  return result;
}

struct NnResult {
  const LabeledTrace* best = nullptr;
  double distance = 0.0;
  std::size_t pruned_count = 0;
};

/// Nearest labeled trace to `query` by banded DTW (see knn_search).
inline NnResult nn_search(const HeartbeatSequence& query, std::span<const LabeledTrace> candidates,
                          CostKind cost = CostKind::Squared, BandPolicy band = {}) {
  if (candidates.empty()) throw Error("nn_search: empty candidate list");
  std::vector<std::vector<double>> rates;
  std::vector<std::string> ids;
  rates.reserve(candidates.size());
  for (const auto& c : candidates) {
    rates.push_back(c.sequence.rates());
    ids.push_back(c.trace_id());
  }
  auto q = query.rates();
  auto res = knn_search(q, rates, ids, 1, cost, band);
  const auto& nb = res.neighbors.front();
  return {&candidates[nb.index], nb.distance, res.pruned_count};
}

}  // namespace pulsemark
