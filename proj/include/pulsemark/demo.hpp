#pragma once

// Multi-threaded demo program instrumented with the emitter. Each worker
// does a small unit of busy work per beat and paces itself to a target
// heart rate, so the emitted rates do not depend on CPU speed.
//   memleak:  the pacing rate sags linearly to (1 - leak_decay) by the end.
//   shutdown: odd-numbered threads (thread 0 when running alone) stop and
//             unregister at `cut` of the run.

#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "emitter.hpp"
#include "synth.hpp"

namespace pulsemark {

struct DemoConfig {
  std::size_t threads = 4;
  std::optional<AnomalyLabel> inject;  // nullopt or Normal: healthy run
  std::size_t samples = 96;            // run length in flush intervals
  double rate = 800.0;                 // beats/sec per thread
  double leak_decay = 0.5;
  double cut = 0.5;
  std::string trace_id = "demo";
  EmitterConfig emitter{};
  std::uint64_t seed = 42;
};

struct DemoStats {
  std::uint64_t beats = 0;
  std::uint64_t emitted = 0;
};

inline bool demo_thread_stops(const DemoConfig& cfg, std::size_t id) {
  if (cfg.inject != AnomalyLabel::Shutdown) return false;
  return cfg.threads == 1 ? true : (id % 2 == 1);
}

inline DemoStats run_demo(const DemoConfig& cfg) {
  if (cfg.threads == 0) throw Error("demo needs at least one thread");
  if (!(cfg.rate > 0.0)) throw Error("demo rate must be > 0");
  if (cfg.samples == 0) throw Error("demo needs at least one sample interval");
  auto session = EmitterSession::start(cfg.emitter, cfg.trace_id);
  using Clock = std::chrono::steady_clock;
  const auto run_ms = static_cast<double>(cfg.samples) * static_cast<double>(cfg.emitter.flush_interval_ms);
  const auto start = Clock::now();
  const auto end = start + std::chrono::microseconds(static_cast<std::int64_t>(run_ms * 1000.0));
  std::atomic<std::uint64_t> total{0};

  std::vector<ThreadHandle> handles;
  for (std::size_t i = 0; i < cfg.threads; ++i) handles.push_back(session.register_thread(static_cast<std::int64_t>(i)));

  std::vector<std::jthread> workers;
  for (std::size_t i = 0; i < cfg.threads; ++i) {
    workers.emplace_back([&, i] {
      const auto& h = handles[i];
      const bool stops = demo_thread_stops(cfg, i);
      const auto stop_at = start + std::chrono::microseconds(static_cast<std::int64_t>(run_ms * cfg.cut * 1000.0));
      std::mt19937_64 rng(derive_seed(cfg.seed, i));
      std::uniform_int_distribution<int> work(200, 400);
      volatile double sink = 0.0;
      std::uint64_t beats = 0;
      auto next = start;
      while (true) {
        const auto now = Clock::now();
        if (now >= end || (stops && now >= stop_at)) break;
        for (int k = work(rng); k > 0; --k) sink = sink + std::sqrt(static_cast<double>(k));
        h.beat();
        ++beats;
        double r = cfg.rate;
        if (cfg.inject == AnomalyLabel::MemoryLeak) {
          const double frac = std::chrono::duration<double, std::milli>(now - start).count() / run_ms;
          r *= 1.0 - cfg.leak_decay * std::min(frac, 1.0);
        }
        next += std::chrono::nanoseconds(static_cast<std::int64_t>(1e9 / r));
        std::this_thread::sleep_until(next);
      }
      total += beats;
      if (stops) session.unregister_thread(h);
    });
  }
  for (auto& w : workers) w.join();
  std::this_thread::sleep_until(end);
  session.stop();
  return {total.load(), session.emitted_beats()};
}

}  // namespace pulsemark
