#include <gtest/gtest.h>

#include "support.hpp"

using namespace pulsemark;
using V = std::vector<double>;

TEST(Dtw, IdenticalIsZero) {
  V q{3, 1, 4, 1, 5};
  EXPECT_EQ(dtw(q, q, CostKind::Absolute), 0.0);
  EXPECT_EQ(dtw(q, q, CostKind::Squared, 0), 0.0);
}

TEST(Dtw, SmallUnboundedExample) {
  EXPECT_EQ(dtw(V{0, 1, 2}, V{0, 1, 3}, CostKind::Absolute), 1.0);
}

TEST(Dtw, ForcedDiagonalSkipsFirstCell) {
  EXPECT_EQ(dtw(V{0, 5}, V{5, 0}, CostKind::Absolute, 0), 5.0);
}

TEST(Dtw, FirstRowAccumulates) {
  // Only path: (0,0) (0,1) (0,2).
  EXPECT_EQ(dtw(V{1}, V{4, 2, 3}, CostKind::Absolute), 3.0);
  EXPECT_EQ(dtw(V{1}, V{4, 2, 3}, CostKind::Squared), 5.0);
}

TEST(Dtw, Errors) {
  EXPECT_THROW(dtw(V{}, V{1}, CostKind::Absolute), Error);
  EXPECT_THROW(dtw(V{1, 2, 3, 4}, V{1}, CostKind::Absolute, 2), Error);
  EXPECT_NO_THROW(dtw(V{1, 2, 3, 4}, V{1}, CostKind::Absolute, 3));
}

TEST(Dtw, MatchesPathEnumeration) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto q = pmtest::random_series(rng, len(rng));
    auto c = pmtest::random_series(rng, len(rng));
    const std::size_t gap = q.size() > c.size() ? q.size() - c.size() : c.size() - q.size();
    for (auto cost : {CostKind::Absolute, CostKind::Squared}) {
      EXPECT_NEAR(dtw(q, c, cost), pmtest::brute_force_dtw(q, c, cost, std::nullopt), 1e-9);
      EXPECT_NEAR(dtw(q, c, cost, gap), pmtest::brute_force_dtw(q, c, cost, gap), 1e-9);
    }
  }
}

TEST(Dtw, AsymmetryBoundedByFirstCell) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto q = pmtest::random_series(rng, 8);
    auto c = pmtest::random_series(rng, 8);
    for (auto cost : {CostKind::Absolute, CostKind::Squared}) {
      const double a = dtw(q, c, cost), b = dtw(c, q, cost);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(std::fabs(a - b), pointwise_cost(q[0], c[0], cost) + 1e-9);
      c[0] = q[0];
      EXPECT_NEAR(dtw(q, c, cost), dtw(c, q, cost), 1e-9);
    }
  }
}

TEST(Dtw, WiderBandNeverWorse) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = pmtest::random_series(rng, 20);
    auto c = pmtest::random_series(rng, 20);
    double prev = dtw(q, c, CostKind::Squared, 0);
    for (std::size_t w = 1; w < 20; ++w) {
      const double d = dtw(q, c, CostKind::Squared, w);
      EXPECT_LE(d, prev + 1e-9);
      prev = d;
    }
    EXPECT_NEAR(prev, dtw(q, c, CostKind::Squared), 1e-9);
  }
}

TEST(Band, DefaultPolicy) {
  EXPECT_EQ(default_band(10), 5u);
  EXPECT_EQ(default_band(50), 5u);
  EXPECT_EQ(default_band(51), 6u);
  EXPECT_EQ(default_band(64), 7u);
  EXPECT_EQ(BandPolicy::of(3).resolve(100), 3u);
}

TEST(Envelope, Examples) {
  auto e = envelope(V{1, 3, 2}, 1);
  EXPECT_EQ(e.upper, (V{3, 3, 3}));
  EXPECT_EQ(e.lower, (V{1, 1, 2}));

  V q{4, 1, 7, 2};
  auto z = envelope(q, 0);
  EXPECT_EQ(z.upper, q);
  EXPECT_EQ(z.lower, q);

  V flat(9, 2.5);
  auto f = envelope(flat, 4);
  EXPECT_EQ(f.upper, flat);
  EXPECT_EQ(f.lower, flat);
}

TEST(Envelope, MatchesNaiveWindow) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    auto q = pmtest::random_series(rng, 1 + trial % 30);
    const std::size_t w = trial % 7;
    auto e = envelope(q, w);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const std::size_t lo = i >= w ? i - w : 0, hi = std::min(q.size() - 1, i + w);
      EXPECT_EQ(e.upper[i], *std::max_element(q.begin() + lo, q.begin() + hi + 1));
      EXPECT_EQ(e.lower[i], *std::min_element(q.begin() + lo, q.begin() + hi + 1));
      EXPECT_LE(e.lower[i], q[i]);
      EXPECT_GE(e.upper[i], q[i]);
    }
  }
}

TEST(LbKeogh, InsideEnvelopeIsZero) {
  EXPECT_EQ(lb_keogh(V{1, 3, 2}, V{2, 2, 2}, 1, CostKind::Squared), 0.0);
  V q{5, 2, 8, 1};
  EXPECT_EQ(lb_keogh(q, q, 2, CostKind::Absolute), 0.0);
}

TEST(LbKeogh, StartingIndexExcluded) {
  // Index 0 pairs q_0 with c_0 on every warping path, a cell the warping cost
  // leaves out, so the bound leaves it out too. Only (0 - 1)^2 remains.
  EXPECT_EQ(lb_keogh(V{1, 3, 2}, V{4, 0, 2}, 1, CostKind::Squared), 1.0);
  EXPECT_EQ(lb_keogh(V{1, 3, 2}, V{1, 0, 5}, 1, CostKind::Squared), 1.0 + 4.0);
  EXPECT_EQ(lb_keogh(V{1, 3, 2}, V{1, 0, 5}, 1, CostKind::Absolute), 1.0 + 2.0);
  // Counting index 0 would exceed the warping distance here.
  EXPECT_EQ(dtw(V{0, 0}, V{5, 0}, CostKind::Squared, 1), 0.0);
  EXPECT_EQ(lb_keogh(V{0, 0}, V{5, 0}, 1, CostKind::Squared), 0.0);
}

TEST(LbKeogh, LengthMismatch) {
  EXPECT_THROW(lb_keogh(V{1, 2}, V{1, 2, 3}, 1, CostKind::Squared), Error);
}

TEST(LbKeogh, NeverExceedsBandedDtw) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 40, w = trial % 6;
    auto q = pmtest::random_series(rng, n);
    auto c = pmtest::random_series(rng, n);
    for (auto cost : {CostKind::Absolute, CostKind::Squared})
      EXPECT_LE(lb_keogh(q, c, w, cost), dtw(q, c, cost, w) + 1e-9);
  }
}

TEST(Resample, Rates) {
  EXPECT_EQ(resample_rates(V{1, 3}, 3), (V{1, 2, 3}));
  EXPECT_EQ(resample_rates(V{7}, 3), (V{7, 7, 7}));
  V x{4, 8, 1, 9, 2};
  EXPECT_EQ(resample_rates(x, x.size()), x);
  auto r = resample_rates(x, 9);
  EXPECT_EQ(r.front(), 4.0);
  EXPECT_EQ(r.back(), 2.0);
  EXPECT_EQ(r[2], 8.0);
}

namespace {

std::vector<LabeledTrace> candidates_from(const std::vector<V>& rates) {
  std::vector<LabeledTrace> out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "c%03zu", i);
    out.push_back({HeartbeatSequence::from_rates(id, rates[i]), "w", AnomalyLabel::Normal});
  }
  return out;
}

}  // namespace

TEST(NnSearch, IdenticalCandidateWins) {
  std::mt19937_64 rng(16);
  std::vector<V> rates;
  for (int i = 0; i < 20; ++i) rates.push_back(pmtest::random_series(rng, 24));
  auto cands = candidates_from(rates);
  auto q = HeartbeatSequence::from_rates("q", rates[13]);
  auto res = nn_search(q, cands);
  EXPECT_EQ(res.best->trace_id(), "c013");
  EXPECT_EQ(res.distance, 0.0);
}

TEST(NnSearch, TieGoesToSmallestTraceId) {
  V a{1, 2, 3, 4, 5, 6};
  std::vector<LabeledTrace> cands;
  cands.push_back({HeartbeatSequence::from_rates("zeta", a), "w", AnomalyLabel::Normal});
  cands.push_back({HeartbeatSequence::from_rates("alpha", a), "w", AnomalyLabel::Shutdown});
  cands.push_back({HeartbeatSequence::from_rates("mid", a), "w", AnomalyLabel::Normal});
  V q{1, 2, 3, 4, 5, 7};
  auto res = nn_search(HeartbeatSequence::from_rates("q", q), cands);
  EXPECT_EQ(res.best->trace_id(), "alpha");
  EXPECT_EQ(res.distance, 1.0);
}

TEST(NnSearch, EmptyCandidatesRejected) {
  EXPECT_THROW(nn_search(HeartbeatSequence::from_rates("q", V{1, 2}), std::span<const LabeledTrace>{}), Error);
}

TEST(NnSearch, PrunedEqualsExhaustive) {
  std::mt19937_64 rng(17);
  std::size_t pruned = 0;
  for (int qi = 0; qi < 30; ++qi) {
    std::vector<V> rates;
    // Random walks of mixed length give a spread of distances.
    for (int i = 0; i < 60; ++i) {
      V r(20 + (i % 9));
      double x = 50.0;
      std::normal_distribution<double> step(0.0, 3.0);
      for (auto& v : r) v = (x += step(rng));
      rates.push_back(r);
    }
    auto cands = candidates_from(rates);
    V qr(24);
    double x = 50.0;
    std::normal_distribution<double> step(0.0, 3.0);
    for (auto& v : qr) v = (x += step(rng));
    auto q = HeartbeatSequence::from_rates("q", qr);
    auto res = nn_search(q, cands);
    pruned += res.pruned_count;

    const std::size_t w = default_band(qr.size());
    double best = std::numeric_limits<double>::infinity();
    std::string best_id;
    for (const auto& c : cands) {
      const double d = dtw(qr, resample_rates(c.sequence.rates(), qr.size()), CostKind::Squared, w);
      if (d < best || (d == best && c.trace_id() < best_id)) {
        best = d;
        best_id = c.trace_id();
      }
    }
    EXPECT_EQ(res.best->trace_id(), best_id);
    EXPECT_EQ(res.distance, best);
  }
  EXPECT_GT(pruned, 0u);
}

TEST(KnnSearch, NeighboursOrderedAndExact) {
  std::mt19937_64 rng(18);
  std::vector<V> rates;
  std::vector<std::string> ids;
  for (int i = 0; i < 80; ++i) {
    rates.push_back(pmtest::random_series(rng, 16));
    ids.push_back("id" + std::to_string(100 + i));
  }
  auto q = pmtest::random_series(rng, 16);
  auto res = knn_search(q, rates, ids, 5, CostKind::Absolute, BandPolicy::of(3));
  ASSERT_EQ(res.neighbors.size(), 5u);

  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < rates.size(); ++i) all.emplace_back(dtw(q, rates[i], CostKind::Absolute, 3), ids[i]);
  std::sort(all.begin(), all.end());
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(ids[res.neighbors[k].index], all[k].second);
    EXPECT_EQ(res.neighbors[k].distance, all[k].first);
  }
}
