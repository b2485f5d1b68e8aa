#pragma once

// Labeled synthetic heartbeat traces with injected memory-leak and shutdown
// anomalies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"

namespace pulsemark {

/// SplitMix64 finalizer; every stochastic component derives its seed from a
/// master seed by hashing (master, stream...) through this.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Streams>
std::uint64_t derive_seed(std::uint64_t master, Streams... streams) {
  std::uint64_t s = mix_seed(master);
  ((s = mix_seed(s ^ static_cast<std::uint64_t>(streams))), ...);
  return s;
}

struct WorkloadProfile {
  std::string workload_id;
  double base_rate = 1000.0;      // beats/sec
  double noise_sd = 0.0;          // beats/sec
  std::size_t n_samples = 64;
  double sample_interval = 0.1;   // seconds
  double phase_amplitude = 0.0;   // [0, 1)
  double phase_period = 16.0;     // samples

  // Rates are clipped at zero, so large noise relative to the trough is allowed.
  void validate() const {
    if (workload_id.empty() || !detail::is_identifier(workload_id))
      throw Error("workload profile needs a non-empty identifier");
    if (!(base_rate > 0.0)) throw Error("profile " + workload_id + ": base_rate must be > 0");
    if (!(noise_sd >= 0.0)) throw Error("profile " + workload_id + ": noise_sd must be >= 0");
    if (n_samples < 8) throw Error("profile " + workload_id + ": n_samples must be >= 8");
    if (!(sample_interval >= 0.001))
      throw Error("profile " + workload_id + ": sample_interval must be >= 1 ms");
    if (!(phase_amplitude >= 0.0 && phase_amplitude < 1.0))
      throw Error("profile " + workload_id + ": phase_amplitude must be in [0, 1)");
    if (!(phase_period > 0.0)) throw Error("profile " + workload_id + ": phase_period must be > 0");
  }
};

struct InjectionSpec {
  AnomalyLabel label = AnomalyLabel::Normal;
  double leak_decay = 0.5;    // alpha: rate falls to (1 - alpha) by the end
  double leak_stretch = 0.3;  // beta: sample spacing grows to (1 + beta)
  double shutdown_cut = 0.5;  // fraction of samples kept before the stop
  std::size_t shutdown_tail = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (label == AnomalyLabel::MemoryLeak) {
      if (!(leak_decay >= 0.1 && leak_decay <= 0.9)) throw Error("leak_decay must be in [0.1, 0.9]");
      if (!(leak_stretch >= 0.0 && leak_stretch <= 1.0))
        throw Error("leak_stretch must be in [0, 1]");
    } else if (label == AnomalyLabel::Shutdown) {
      if (!(shutdown_cut > 0.1 && shutdown_cut < 0.9)) throw Error("shutdown_cut must be in (0.1, 0.9)");
    }
  }
};

/// One trace of `profile` with `spec`'s anomaly injected. Deterministic in spec.seed.
inline LabeledTrace generate_trace(const WorkloadProfile& profile, const InjectionSpec& spec,
                                   std::string trace_id = {}, std::int64_t thread_id = 0) {
  profile.validate();
  spec.validate();
  if (trace_id.empty()) trace_id = profile.workload_id + "-" + std::string(to_string(spec.label));

  const std::size_t n = profile.n_samples;
  const double nd = static_cast<double>(n);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<double> rates(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / profile.phase_period);
    const double eps = profile.noise_sd > 0.0 ? profile.noise_sd * noise(rng) : 0.0;
    rates[i] = std::max(0.0, profile.base_rate * (1.0 + profile.phase_amplitude * phase) + eps);
  }
  std::vector<std::int64_t> ms(n);
  for (std::size_t i = 0; i < n; ++i)
    ms[i] = std::llround(static_cast<double>(i) * profile.sample_interval * 1000.0);

  switch (spec.label) {
    case AnomalyLabel::Normal:
      break;
    case AnomalyLabel::MemoryLeak: {
      double t = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / nd;
        rates[i] *= 1.0 - spec.leak_decay * frac;
        if (i > 0) t += profile.sample_interval * (1.0 + spec.leak_stretch * frac);
        ms[i] = std::llround(t * 1000.0);
      }
      break;
    }
    case AnomalyLabel::Shutdown: {
      const auto keep = static_cast<std::size_t>(std::floor(spec.shutdown_cut * nd));
      if (keep == 0) throw Error("shutdown_cut leaves no samples before the stop");
      rates.resize(keep);
      ms.resize(keep);
      for (std::size_t j = 0; j < spec.shutdown_tail; ++j) {
        rates.push_back(0.0);
        ms.push_back(std::llround(static_cast<double>(keep + j) * profile.sample_interval * 1000.0));
      }
      break;
    }
  }

  std::vector<HeartbeatPoint> pts(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i)
    pts[i] = {static_cast<double>(ms[i]) / 1000.0, rates[i]};
  return {HeartbeatSequence(std::move(trace_id), thread_id, std::move(pts)), profile.workload_id,
          spec.label};
}

/// Six profiles named after the NPB, EPCC and Jacobi benchmarks.
inline std::vector<WorkloadProfile> default_profiles() {
  return {
      {"npb-sp", 1200.0, 60.0, 64, 0.1, 0.15, 16.0},
      {"npb-lu", 900.0, 45.0, 64, 0.1, 0.25, 12.0},
      {"npb-bt", 1500.0, 75.0, 64, 0.1, 0.10, 24.0},
      {"npb-cg", 600.0, 30.0, 64, 0.1, 0.30, 8.0},
      {"epcc-array", 2000.0, 100.0, 64, 0.1, 0.05, 32.0},
      {"jacobi", 800.0, 40.0, 64, 0.1, 0.20, 20.0},
  };
}

inline std::optional<WorkloadProfile> find_profile(std::string_view name) {
  for (auto& p : default_profiles())
    if (p.workload_id == name) return p;
  return std::nullopt;
}

/// Injection magnitudes applied to every generated anomaly.
struct InjectionDefaults {
  double leak_decay = 0.5;
  double leak_stretch = 0.3;
  double cut_min = 0.2;
  double cut_max = 0.8;
  std::size_t shutdown_tail = 4;
};

/// profiles x 3 classes x per_class_count traces, sorted by trace_id.
/// Trace i of class c in profile p is seeded with derive_seed(seed, p, c, i);
/// the shutdown cut is the first uniform draw of a generator on that seed's
/// second stream.
inline Dataset generate_dataset(std::span<const WorkloadProfile> profiles, std::size_t per_class_count,
                                std::uint64_t seed, const InjectionDefaults& inj = {}) {
  if (per_class_count < 1) throw Error("per_class_count must be >= 1");
  if (profiles.empty()) throw Error("generate_dataset needs at least one profile");
  Dataset ds;
  ds.traces.reserve(profiles.size() * kLabelCount * per_class_count);
  std::string names;
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto& prof = profiles[p];
    names += (p ? ";" : "") + prof.workload_id;
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      for (std::size_t i = 0; i < per_class_count; ++i) {
        InjectionSpec spec;
        spec.label = kAllLabels[c];
        spec.seed = derive_seed(seed, p, c, i);
        spec.leak_decay = inj.leak_decay;
        spec.leak_stretch = inj.leak_stretch;
        spec.shutdown_tail = inj.shutdown_tail;
        std::mt19937_64 aux(derive_seed(spec.seed, 1));
        spec.shutdown_cut = std::uniform_real_distribution<double>(inj.cut_min, inj.cut_max)(aux);
        char id[160];
        std::snprintf(id, sizeof id, "%s-%s-%03zu", prof.workload_id.c_str(),
                      std::string(to_string(spec.label)).c_str(), i);
        ds.traces.push_back(generate_trace(prof, spec, id, static_cast<std::int64_t>(i % 8)));
      }
    }
  }
  std::sort(ds.traces.begin(), ds.traces.end(),
            [](const auto& a, const auto& b) { return a.trace_id() < b.trace_id(); });
  ds.metadata["generator"] = "pulsemark-synth/1";
  ds.metadata["seed"] = std::to_string(seed);
  ds.metadata["per_class_count"] = std::to_string(per_class_count);
  ds.metadata["profiles"] = names;
  ds.metadata["leak_decay"] = detail::format_g(inj.leak_decay, 6);
  ds.metadata["leak_stretch"] = detail::format_g(inj.leak_stretch, 6);
  ds.metadata["shutdown_cut"] =
      detail::format_g(inj.cut_min, 6) + ".." + detail::format_g(inj.cut_max, 6);
  ds.metadata["shutdown_tail"] = std::to_string(inj.shutdown_tail);
  return ds;
}

}  // namespace pulsemark
