#include <gtest/gtest.h>

#include "support.hpp"

using namespace pulsemark;

namespace {

HeartbeatSequence at_times(std::vector<double> ts, std::vector<double> rates = {}) {
  if (rates.empty()) rates.assign(ts.size(), 1.0);
  std::vector<HeartbeatPoint> pts;
  for (std::size_t i = 0; i < ts.size(); ++i) pts.push_back({ts[i], rates[i]});
  return {"s", 0, pts};
}

HeartbeatSequence random_walk(std::mt19937_64& rng, std::size_t n, double dt = 0.1) {
  std::normal_distribution<double> step(0.0, 20.0);
  std::vector<HeartbeatPoint> pts;
  double r = 500.0;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({static_cast<double>(i) * dt, r});
    r = std::max(1.0, r + step(rng));
  }
  return {"rw", 0, pts};
}

}  // namespace

TEST(GlobalTimeRatio, Examples) {
  auto q = at_times({0, 5, 10});
  auto c = at_times({0, 7, 15});
  EXPECT_EQ(global_time_ratio(q, q), 1.0);
  EXPECT_EQ(global_time_ratio(c, q), 1.5);
  EXPECT_THROW(global_time_ratio(c, at_times({0})), Error);
}

TEST(LocalTimeRatio, Examples) {
  auto q = at_times({0, 1, 2, 3});
  auto c = at_times({0, 1, 2, 5});
  auto r = local_time_ratio(c, q, {2, 1});
  EXPECT_DOUBLE_EQ(r.value, 1.5);
  EXPECT_EQ(r.windows, 2u);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_FALSE(r.degenerate);

  EXPECT_EQ(local_time_ratio(q, q, {2, 1}).value, 1.0);
  auto doubled = at_times({0, 2, 4, 6});
  EXPECT_EQ(local_time_ratio(doubled, q, {2, 1}).value, 2.0);
}

TEST(LocalTimeRatio, TooShort) {
  auto q = at_times({0, 1, 2});
  EXPECT_THROW(local_time_ratio(q, q, {3, 1}), Error);
  EXPECT_NO_THROW(local_time_ratio(q, q, {2, 1}));
}

TEST(LocalTimeRatio, TruncatesToShorter) {
  auto q = at_times({0, 1, 2, 3, 4, 5});
  auto c = at_times({0, 3, 6});
  auto r = local_time_ratio(c, q, {1, 1});
  EXPECT_EQ(r.windows, 2u);
  EXPECT_EQ(r.value, 3.0);
}

TEST(GlobalHbRatio, Examples) {
  auto q = at_times({0, 1, 2}, {1, 1, 1});
  auto c = at_times({0, 1}, {2, 2});
  EXPECT_EQ(global_hb_ratio(q, q), 1.0);
  EXPECT_EQ(global_hb_ratio(c, q), 2.0);
  EXPECT_THROW(global_hb_ratio(c, at_times({0, 1}, {0, 0})), Error);
}

TEST(LocalHbRatio, Examples) {
  auto q = at_times({0, 1, 2, 3, 4}, {1, 4, 2, 8, 3});
  EXPECT_EQ(local_hb_ratio(q, q, {1, 1}).value, 1.0);

  auto c = at_times({0, 1, 2, 3, 4}, {10, 19, 13, 31, 16});
  EXPECT_DOUBLE_EQ(local_hb_ratio(c, q, {1, 1}).value, 3.0);

  auto flat = at_times({0, 1, 2, 3, 4}, {5, 5, 5, 5, 5});
  auto r = local_hb_ratio(c, flat, {2, 2});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.value, 1.0);
  EXPECT_EQ(r.windows, 2u);
  EXPECT_EQ(r.skipped, 2u);
}

TEST(LocalHbRatio, SkipsFlatWindowsAndKeepsSign) {
  auto q = at_times({0, 1, 2, 3, 4}, {1, 1, 3, 3, 5});
  auto c = at_times({0, 1, 2, 3, 4}, {9, 7, 5, 3, 1});
  auto r = local_hb_ratio(c, q, {1, 1});
  EXPECT_EQ(r.windows, 4u);
  EXPECT_EQ(r.skipped, 2u);
  EXPECT_EQ(r.value, -1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(Extract, IdentityVector) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto q = random_walk(rng, 40);
    auto fv = extract(q, q);
    EXPECT_EQ(fv.values(), (std::array<double, 7>{1, 1, 1, 1, 0, 0, 1}));
  }
}

TEST(Extract, SimilarityPairOrdered) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = random_walk(rng, 30 + trial % 10);
    auto c = random_walk(rng, 25 + trial % 17);
    for (auto cost : {CostKind::Absolute, CostKind::Squared}) {
      FeatureConfig cfg;
      cfg.cost = cost;
      auto fv = extract(c, q, cfg);
      EXPECT_GE(fv.lb_to_ref, 0.0);
      EXPECT_LE(fv.lb_to_ref, fv.dtw_to_ref + 1e-9);
      EXPECT_DOUBLE_EQ(fv.length_ratio, static_cast<double>(c.size()) / static_cast<double>(q.size()));
    }
  }
}

TEST(Extract, AnomaliesAgainstNoiseFreePrototype) {
  WorkloadProfile p{"flat", 1000.0, 0.0, 64, 0.1, 0.2, 16.0};
  auto proto = generate_trace(p, {AnomalyLabel::Normal}).sequence;
  InjectionSpec leak;
  leak.label = AnomalyLabel::MemoryLeak;
  auto fl = extract(generate_trace(p, leak).sequence, proto);
  EXPECT_LT(fl.global_hb_ratio, 1.0);
  EXPECT_GT(fl.global_time_ratio, 1.0);
  EXPECT_GT(fl.local_time_ratio, 1.0);

  InjectionSpec shut;
  shut.label = AnomalyLabel::Shutdown;
  auto fs = extract(generate_trace(p, shut).sequence, proto);
  EXPECT_LT(fs.length_ratio, 1.0);
  EXPECT_LT(fs.global_time_ratio, 1.0);
}

TEST(Extract, ScaleAndDilationResponses) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto q = random_walk(rng, 32);
    auto c = random_walk(rng, 28);
    const auto base = extract(c, q);
    for (double s : {0.5, 2.0, 4.0}) {
      std::vector<HeartbeatPoint> scaled = c.points(), dilated = c.points();
      for (auto& p : scaled) p.rate *= s;
      for (auto& p : dilated) p.t *= s;
      auto fs = extract(HeartbeatSequence("c", 0, scaled), q);
      auto fd = extract(HeartbeatSequence("c", 0, dilated), q);
      EXPECT_EQ(fs.global_hb_ratio, base.global_hb_ratio * s);
      EXPECT_EQ(fs.global_time_ratio, base.global_time_ratio);
      EXPECT_EQ(fd.global_time_ratio, base.global_time_ratio * s);
      EXPECT_EQ(fd.global_hb_ratio, base.global_hb_ratio);
    }
  }
}

TEST(Extract, WindowCountsReported) {
  auto q = at_times({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {1, 2, 3, 3, 3, 3, 9, 1, 4, 4, 4});
  WindowSpec spec{2, 2};
  auto r = local_hb_ratio(q, q, spec);
  EXPECT_EQ(r.windows, spec.count(q.size() - 1));
  EXPECT_EQ(r.windows, 5u);
  EXPECT_EQ(r.skipped, 2u);
}
