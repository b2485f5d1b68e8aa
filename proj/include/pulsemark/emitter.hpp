#pragma once

// In-process heartbeat API. Worker threads call beat() on their handle; a
// single flusher snapshots and resets every per-thread counter once per
// flush interval and writes one record per registered thread:
//
//   HB <trace_id> <thread_id> <timestamp_ms> <heart_rate>
//
// heart_rate = beats in the interval / interval length (beats per second).

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "core.hpp"
#include "net.hpp"

namespace pulsemark {

struct StdoutSink {};
struct FileSink {
  std::filesystem::path path;
};
struct StreamSink {
  std::string address;  // host:port of a collector
};
using SinkSpec = std::variant<StdoutSink, FileSink, StreamSink>;

struct EmitterConfig {
  std::int64_t flush_interval_ms = 100;
  SinkSpec sink = StdoutSink{};
  /// No background flusher; intervals are closed by EmitterSession::advance().
  bool manual_clock = false;
};

/// Formats one record line (newline included).
inline std::string format_record(std::string_view trace_id, std::int64_t thread_id,
                                 std::int64_t timestamp_ms, double heart_rate) {
  std::string s = "HB ";
  s.append(trace_id);
  s += ' ' + std::to_string(thread_id) + ' ' + std::to_string(timestamp_ms) + ' ' +
       detail::format_g(heart_rate, 6) + '\n';
  return s;
}

namespace detail {

struct alignas(64) BeatSlot {
  explicit BeatSlot(std::int64_t id) : thread_id(id) {}
  std::atomic<std::uint64_t> count{0};
  std::atomic<bool> retired{false};
  std::int64_t thread_id;
};

class LineWriter {
 public:
  virtual ~LineWriter() = default;
  virtual void write(std::string_view text) = 0;
};

class FileWriter final : public LineWriter {
 public:
  FileWriter(std::FILE* f, bool owned) : f_(f), owned_(owned) {}
  ~FileWriter() override {
    if (owned_) std::fclose(f_);
    else std::fflush(f_);
  }
  void write(std::string_view text) override {
    std::fwrite(text.data(), 1, text.size(), f_);
    std::fflush(f_);
  }

 private:
  std::FILE* f_;
  bool owned_;
};

class SocketWriter final : public LineWriter {
 public:
  explicit SocketWriter(net::Socket s) : s_(std::move(s)) {}
  void write(std::string_view text) override { net::send_all(s_, text); }

 private:
  net::Socket s_;
};

inline std::unique_ptr<LineWriter> open_sink(const SinkSpec& spec) {
  if (std::holds_alternative<StdoutSink>(spec)) return std::make_unique<FileWriter>(stdout, false);
  if (auto* f = std::get_if<FileSink>(&spec)) {
    std::FILE* fp = std::fopen(f->path.c_str(), "wb");
    if (!fp) throw Error("cannot open heartbeat sink file " + f->path.string());
    return std::make_unique<FileWriter>(fp, true);
  }
  const auto& s = std::get<StreamSink>(spec);
  return std::make_unique<SocketWriter>(net::connect_tcp(net::parse_endpoint(s.address)));
}

}  // namespace detail

/// Per-thread registration token. Copyable; all copies feed the same counter.
class ThreadHandle {
 public:
  ThreadHandle() = default;

  /// Wait-free: one relaxed load and one relaxed atomic increment.
  void beat() const {
    if (!slot_ || slot_->retired.load(std::memory_order_relaxed))
      throw Error("beat() on an unregistered thread handle");
    slot_->count.fetch_add(1, std::memory_order_relaxed);
  }
  bool valid() const { return static_cast<bool>(slot_); }
  std::int64_t thread_id() const { return slot_ ? slot_->thread_id : -1; }

 private:
  friend class EmitterSession;
  explicit ThreadHandle(std::shared_ptr<detail::BeatSlot> slot) : slot_(std::move(slot)) {}
  std::shared_ptr<detail::BeatSlot> slot_;
};

inline void beat(const ThreadHandle& h) { h.beat(); }

class EmitterSession {
 public:
  /// Opens the sink (failing here, not at the first flush), writes the header
  /// line and starts the flusher.
  static EmitterSession start(const EmitterConfig& config, std::string trace_id) {
    if (config.flush_interval_ms < 1) throw Error("flush_interval_ms must be >= 1");
    if (!detail::is_identifier(trace_id)) throw Error("trace_id must be a non-empty token");
    auto st = std::make_unique<State>();
    st->trace_id = std::move(trace_id);
    st->interval_ms = config.flush_interval_ms;
    st->manual = config.manual_clock;
    st->out = detail::open_sink(config.sink);
    st->out->write("# pulsemark-hb v1 trace=" + st->trace_id +
                   " flush_interval_ms=" + std::to_string(st->interval_ms) + "\n");
    st->origin = std::chrono::steady_clock::now();
    EmitterSession s(std::move(st));
    if (!config.manual_clock) {
      State* raw = s.state_.get();
      s.state_->flusher = std::jthread([raw](std::stop_token tok) { raw->run(tok); });
    }
    return s;
  }

  EmitterSession(EmitterSession&&) noexcept = default;
  EmitterSession& operator=(EmitterSession&& o) noexcept {
    if (this != &o) {
      if (state_) stop();
      state_ = std::move(o.state_);
    }
    return *this;
  }
  ~EmitterSession() {
    if (state_) {
      try {
        stop();
      } catch (...) {
      }
    }
  }

  ThreadHandle register_thread(std::int64_t thread_id) {
    std::lock_guard lk(state_->mu);
    if (state_->stopped) throw Error("register_thread after stop");
    for (const auto& s : state_->slots)
      if (s->thread_id == thread_id) throw Error("thread_id " + std::to_string(thread_id) + " already registered");
    auto slot = std::make_shared<detail::BeatSlot>(thread_id);
    state_->slots.push_back(slot);
    return ThreadHandle(std::move(slot));
  }

  /// The thread's pending beats go out with the next flush, after which it
  /// produces no more records.
  void unregister_thread(const ThreadHandle& h) {
    if (!h.slot_) return;
    h.slot_->retired.store(true, std::memory_order_release);
  }

  /// Closes one interval when running with a manual clock.
  void advance() {
    if (!state_->manual) throw Error("advance() requires manual_clock");
    std::lock_guard lk(state_->mu);
    if (state_->stopped) throw Error("advance() after stop");
    state_->flush_locked(state_->next_tick_ts(), false);
  }

  /// Flushes the final partial interval and closes the sink. Idempotent.
  void stop() {
    if (!state_) return;
    if (state_->flusher.joinable()) {
      state_->flusher.request_stop();
      state_->flusher.join();
    }
    std::lock_guard lk(state_->mu);
    if (state_->stopped) return;
    std::int64_t ts;
    if (state_->manual) {
      ts = state_->next_tick_ts();
    } else {
      auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - state_->origin)
                         .count();
      ts = std::max<std::int64_t>(elapsed, state_->last_ts + 1);
    }
    state_->flush_locked(ts, true);
    state_->out.reset();
    state_->stopped = true;
  }

  const std::string& trace_id() const { return state_->trace_id; }
  std::int64_t flush_interval_ms() const { return state_->interval_ms; }
  /// Beats written to the sink so far.
  std::uint64_t emitted_beats() const {
    std::lock_guard lk(state_->mu);
    return state_->emitted;
  }
  std::uint64_t records_written() const {
    std::lock_guard lk(state_->mu);
    return state_->records;
  }

 private:
  struct State {
    std::string trace_id;
    std::int64_t interval_ms = 100;
    bool manual = false;
    std::unique_ptr<detail::LineWriter> out;
    std::chrono::steady_clock::time_point origin;
    mutable std::mutex mu;
    std::condition_variable_any cv;
    std::vector<std::shared_ptr<detail::BeatSlot>> slots;
    std::int64_t tick = 0;
    std::int64_t last_ts = 0;
    std::uint64_t emitted = 0;
    std::uint64_t records = 0;
    bool stopped = false;
    std::jthread flusher;

    std::int64_t next_tick_ts() const { return (tick + 1) * interval_ms; }

    // final_flush: only threads with pending beats get a record.
    void flush_locked(std::int64_t ts, bool final_flush) {
      std::string buf;
      const double seconds = static_cast<double>(interval_ms) / 1000.0;
      std::vector<std::shared_ptr<detail::BeatSlot>> keep;
      for (auto& s : slots) {
        const bool retired = s->retired.load(std::memory_order_acquire);
        const std::uint64_t c = s->count.exchange(0, std::memory_order_relaxed);
        if (!final_flush || c > 0) {
          buf += format_record(trace_id, s->thread_id, ts, static_cast<double>(c) / seconds);
          emitted += c;
          ++records;
        }
        if (!retired) keep.push_back(s);
      }
      slots = std::move(keep);
      ++tick;
      last_ts = ts;
      if (!buf.empty()) out->write(buf);
    }

    void run(std::stop_token tok) {
      std::unique_lock lk(mu);
      while (true) {
        auto deadline = origin + std::chrono::milliseconds(next_tick_ts());
        if (cv.wait_until(lk, tok, deadline, [] { return false; }), tok.stop_requested()) return;
        try {
          flush_locked(next_tick_ts(), false);
        } catch (const std::exception& e) {
          std::fprintf(stderr, "pulsemark emitter: sink error: %s\n", e.what());
          return;
        }
      }
    }
  };

  explicit EmitterSession(std::unique_ptr<State> st) : state_(std::move(st)) {}
  std::unique_ptr<State> state_;
};

}  // namespace pulsemark
