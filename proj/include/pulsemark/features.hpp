#pragma once

// Sequence features of a candidate C measured against a reference Q.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "core.hpp"
#include "similarity.hpp"

namespace pulsemark {

struct FeatureVector {
  double global_time_ratio = 1.0;
  double local_time_ratio = 1.0;
  double global_hb_ratio = 1.0;
  double local_hb_ratio = 1.0;
  double dtw_to_ref = 0.0;
  double lb_to_ref = 0.0;
  double length_ratio = 1.0;

  static constexpr std::size_t kSize = 7;
  static constexpr const char* kNames[kSize] = {
      "global_time_ratio", "local_time_ratio", "global_hb_ratio", "local_hb_ratio",
      "dtw_to_ref",        "lb_to_ref",        "length_ratio"};

  std::array<double, kSize> values() const {
    return {global_time_ratio, local_time_ratio, global_hb_ratio, local_hb_ratio,
            dtw_to_ref,        lb_to_ref,        length_ratio};
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Result of a windowed mean. `skipped` windows had a (near) zero denominator.
struct WindowedRatio {
  double value = 1.0;
  std::size_t windows = 0;
  std::size_t skipped = 0;
  bool degenerate = false;  // every window skipped; value forced to 1
};

inline constexpr double kRateEpsilon = 1e-9;

struct FeatureConfig {
  WindowSpec window{};
  CostKind cost = CostKind::Squared;
  BandPolicy band{};
};

namespace detail {

// Mean of num(i)/den(i) over windows i = 0, stride, ... with i + w < L.
template <typename Num, typename Den>
WindowedRatio windowed_ratio(std::size_t L, const WindowSpec& spec, double eps, Num num, Den den) {
  spec.validate();
  if (L < spec.w + 1)
    throw Error("sliding window needs at least w + 1 = " + std::to_string(spec.w + 1) +
                " aligned samples, got " + std::to_string(L));
  WindowedRatio out;
  out.windows = spec.count(L - 1);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < out.windows; ++k) {
    const std::size_t i = k * spec.stride;
    const double d = den(i, i + spec.w);
    if (std::fabs(d) <= eps) {
      ++out.skipped;
      continue;
    }
    sum += num(i, i + spec.w) / d;
    ++used;
  }
  if (used == 0) {
    out.degenerate = true;
    out.value = 1.0;
  } else {
    out.value = sum / static_cast<double>(used);
  }
  return out;
}

}  // namespace detail

/// Completion time of C over completion time of Q.
inline double global_time_ratio(const HeartbeatSequence& c, const HeartbeatSequence& q) {
  if (q.completion_time() == 0.0) throw Error("global_time_ratio: reference completion time is 0");
  return c.completion_time() / q.completion_time();
}

inline WindowedRatio local_time_ratio(const HeartbeatSequence& c, const HeartbeatSequence& q,
                                      const WindowSpec& spec) {
  const std::size_t L = std::min(c.size(), q.size());
  return detail::windowed_ratio(
      L, spec, 0.0, [&](std::size_t a, std::size_t b) { return c[b].t - c[a].t; },
      [&](std::size_t a, std::size_t b) { return q[b].t - q[a].t; });
}

/// Mean rate of C over mean rate of Q.
inline double global_hb_ratio(const HeartbeatSequence& c, const HeartbeatSequence& q) {
  double sc = 0.0, sq = 0.0;
  for (const auto& p : c.points()) sc += p.rate;
  for (const auto& p : q.points()) sq += p.rate;
  const double mq = sq / static_cast<double>(q.size());
  if (mq == 0.0) throw Error("global_hb_ratio: reference mean rate is 0");
  return (sc / static_cast<double>(c.size())) / mq;
}

/// Signed ratio of windowed rate changes; windows where Q barely moves are skipped.
inline WindowedRatio local_hb_ratio(const HeartbeatSequence& c, const HeartbeatSequence& q,
                                    const WindowSpec& spec) {
  const std::size_t L = std::min(c.size(), q.size());
  return detail::windowed_ratio(
      L, spec, kRateEpsilon, [&](std::size_t a, std::size_t b) { return c[b].rate - c[a].rate; },
      [&](std::size_t a, std::size_t b) { return q[b].rate - q[a].rate; });
}

/// All seven features of C against reference Q. The similarity pair is
/// computed on C's rates resampled onto Q's length, with one shared band.
inline FeatureVector extract(const HeartbeatSequence& c, const HeartbeatSequence& q,
                             const FeatureConfig& cfg = {}) {
  FeatureVector fv;
  fv.global_time_ratio = global_time_ratio(c, q);
  fv.local_time_ratio = local_time_ratio(c, q, cfg.window).value;
  fv.global_hb_ratio = global_hb_ratio(c, q);
  fv.local_hb_ratio = local_hb_ratio(c, q, cfg.window).value;

  const auto q_rates = q.rates();
  const auto c_rates = resample_rates(c.rates(), q.size());
  const std::size_t w = cfg.band.resolve(q.size());
  fv.dtw_to_ref = dtw(q_rates, c_rates, cfg.cost, w);
  fv.lb_to_ref = lb_keogh(q_rates, c_rates, w, cfg.cost);
  fv.length_ratio = static_cast<double>(c.size()) / static_cast<double>(q.size());

  for (double v : fv.values())
    if (!std::isfinite(v)) throw Error("non-finite feature for trace '" + c.trace_id() + "'");
  return fv;
}

}  // namespace pulsemark
