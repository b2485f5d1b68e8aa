#pragma once

// Online diagnosis over heartbeat record streams.
//
// Input lines:  HB <trace_id> <thread_id> <timestamp_ms> <heart_rate>
// Output lines: DIAG <trace_id> <thread_id> <window_end_ts> <label> <distance> <reason>
//
// Each (trace, thread) keeps a ring of its last W samples. Once the ring is
// full and `stride` samples arrived since the previous diagnosis, the window
// is resampled onto the model's reference length and classified by HSA
// (reason "model"). A thread whose trace has advanced more than the silence
// deadline past its last record is reported as shutdown (reason "silence").
// Both rules run on stream timestamps only, so replay is deterministic; the
// live server adds a wall-clock rule for streams that go quiet entirely.

#include <poll.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "classify/hsa.hpp"
#include "core.hpp"
#include "net.hpp"

namespace pulsemark {

struct WindowParams {
  std::size_t window = 64;
  std::size_t stride = 16;
  std::int64_t silence_ms = 500;  // 5 x the default emitter flush interval

  void validate() const {
    if (window < 2) throw Error("window must be >= 2 samples");
    if (stride < 1) throw Error("stride must be >= 1");
    if (silence_ms < 1) throw Error("silence deadline must be >= 1 ms");
  }
};

enum class DiagReason : std::uint8_t { Model, Silence };

inline std::string_view to_string(DiagReason r) { return r == DiagReason::Model ? "model" : "silence"; }

struct Diagnosis {
  std::string trace_id;
  std::int64_t thread_id = 0;
  std::int64_t window_end_ts = 0;
  AnomalyLabel label = AnomalyLabel::Normal;
  double distance = 0.0;
  DiagReason reason = DiagReason::Model;
  friend bool operator==(const Diagnosis&, const Diagnosis&) = default;
};

inline std::string format_diag(const Diagnosis& d) {
  std::string s = "DIAG " + d.trace_id + ' ' + std::to_string(d.thread_id) + ' ' +
                  std::to_string(d.window_end_ts) + ' ' + std::string(to_string(d.label)) + ' ' +
                  detail::format_g(d.distance, 6) + ' ' + std::string(to_string(d.reason)) + '\n';
  return s;
}

inline std::optional<Diagnosis> parse_diag(std::string_view line) {
  auto t = detail::tokens(line);
  if (t.size() != 7 || t[0] != "DIAG") return std::nullopt;
  auto tid = detail::parse_number<std::int64_t>(t[2]);
  auto ts = detail::parse_number<std::int64_t>(t[3]);
  auto label = parse_label(t[4]);
  auto dist = detail::parse_number<double>(t[5]);
  if (!tid || !ts || !label || !dist || (t[6] != "model" && t[6] != "silence")) return std::nullopt;
  return Diagnosis{std::string(t[1]), *tid, *ts, *label, *dist,
                   t[6] == "model" ? DiagReason::Model : DiagReason::Silence};
}

struct HbRecord {
  std::string trace_id;
  std::int64_t thread_id = 0;
  std::int64_t timestamp_ms = 0;
  double heart_rate = 0.0;
};

inline std::optional<HbRecord> parse_record(std::string_view line) {
  auto t = detail::tokens(line);
  if (t.size() != 5 || t[0] != "HB") return std::nullopt;
  auto tid = detail::parse_number<std::int64_t>(t[2]);
  auto ts = detail::parse_number<std::int64_t>(t[3]);
  auto rate = detail::parse_number<double>(t[4]);
  if (!tid || !ts || !rate || *ts < 0 || *rate < 0.0) return std::nullopt;
  return HbRecord{std::string(t[1]), *tid, *ts, *rate};
}

/// Offline counterpart of one online window: resample onto the model's
/// reference length, then HSA.
inline HsaPrediction classify_window(const HsaModel& model, std::span<const double> rates) {
  return predict_hsa(model, resample_rates(rates, model.reference_length()));
}

class Collector {
 public:
  using Clock = std::chrono::steady_clock;

  Collector(const HsaModel& model, WindowParams params) : model_(model), params_(params) {
    params_.validate();
  }

  /// One input line (without or with trailing newline). Blank lines and '#'
  /// comments are ignored; anything else unparsable is counted and skipped.
  std::vector<Diagnosis> ingest_line(std::string_view line, int source = 0,
                                     Clock::time_point now = Clock::now()) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') return {};
    auto rec = parse_record(line);
    if (!rec) {
      ++malformed_;
      return {};
    }
    return ingest(*rec, source, now);
  }

  std::vector<Diagnosis> ingest(const HbRecord& rec, int source = 0, Clock::time_point now = Clock::now()) {
    auto& trace = traces_[rec.trace_id];
    auto& win = trace.threads[rec.thread_id];
    if (!win.ring.empty() && rec.timestamp_ms <= win.last_ts) {
      ++malformed_;
      return {};
    }
    ++records_;
    win.ring.push_back(rec.heart_rate);
    if (win.ring.size() > params_.window) win.ring.pop_front();
    ++win.since_last;
    win.last_ts = rec.timestamp_ms;
    win.silenced = false;
    win.source = source;
    win.last_arrival = now;
    trace.clock = std::max(trace.clock, rec.timestamp_ms);

    std::vector<Diagnosis> out;
    for (auto& [tid, other] : trace.threads) {
      if (other.silenced || other.ring.empty()) continue;
      if (trace.clock - other.last_ts > params_.silence_ms) {
        other.silenced = true;
        out.push_back(silence(rec.trace_id, tid, other));
      }
    }
    if (win.ring.size() == params_.window && win.since_last >= params_.stride) {
      win.since_last = 0;
      std::vector<double> rates(win.ring.begin(), win.ring.end());
      auto pred = classify_window(model_, rates);
      out.push_back({rec.trace_id, rec.thread_id, win.last_ts, pred.label, pred.distance, DiagReason::Model});
    }
    return out;
  }

  /// Wall-clock rule: threads of a still-open source that have been quiet for
  /// longer than the deadline.
  std::vector<Diagnosis> expire_idle(Clock::time_point now) {
    std::vector<Diagnosis> out;
    for (auto& [trace_id, trace] : traces_)
      for (auto& [tid, win] : trace.threads) {
        if (win.silenced || win.ring.empty() || closed_.count(win.source)) continue;
        if (now - win.last_arrival > std::chrono::milliseconds(params_.silence_ms)) {
          win.silenced = true;
          out.push_back(silence(trace_id, tid, win));
        }
      }
    return out;
  }

  /// The source ended cleanly; its threads are no longer expected to beat.
  void close_source(int source) { closed_.insert(source); }

  std::size_t malformed() const { return malformed_; }
  std::size_t records() const { return records_; }
  std::size_t tracked_threads() const {
    std::size_t n = 0;
    for (const auto& [id, t] : traces_) n += t.threads.size();
    return n;
  }
  const WindowParams& params() const { return params_; }

 private:
  struct Window {
    std::deque<double> ring;
    std::size_t since_last = 0;
    std::int64_t last_ts = 0;
    bool silenced = false;
    int source = 0;
    Clock::time_point last_arrival{};
  };
  struct TraceState {
    std::int64_t clock = 0;
    std::map<std::int64_t, Window> threads;
  };

  static Diagnosis silence(const std::string& trace_id, std::int64_t tid, const Window& w) {
    return {trace_id, tid, w.last_ts, AnomalyLabel::Shutdown, 0.0, DiagReason::Silence};
  }

  const HsaModel& model_;
  WindowParams params_;
  std::map<std::string, TraceState> traces_;
  std::set<int> closed_;
  std::size_t malformed_ = 0;
  std::size_t records_ = 0;
};

struct ReplayResult {
  std::vector<Diagnosis> diagnoses;
  std::size_t malformed = 0;
  std::size_t records = 0;
};

inline ReplayResult replay(std::istream& in, const HsaModel& model, const WindowParams& params) {
  Collector c(model, params);
  ReplayResult r;
  std::string line;
  while (std::getline(in, line))
    for (auto& d : c.ingest_line(line)) r.diagnoses.push_back(std::move(d));
  r.malformed = c.malformed();
  r.records = c.records();
  return r;
}

inline ReplayResult replay(const std::filesystem::path& file, const HsaModel& model,
                           const WindowParams& params) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  return replay(in, model, params);
}

using DiagSink = std::function<void(const std::string& line)>;

namespace detail {

// Serializes collector access and whole-line output across ingestion threads.
class ServeCore {
 public:
  ServeCore(const HsaModel& model, const WindowParams& params, DiagSink sink)
      : collector_(model, params), sink_(std::move(sink)) {}

  void line(std::string_view l, int source) {
    std::lock_guard lk(mu_);
    emit(collector_.ingest_line(l, source));
  }
  void tick() {
    std::lock_guard lk(mu_);
    emit(collector_.expire_idle(Collector::Clock::now()));
  }
  void close(int source) {
    std::lock_guard lk(mu_);
    collector_.close_source(source);
  }
  std::size_t malformed() {
    std::lock_guard lk(mu_);
    return collector_.malformed();
  }

 private:
  void emit(const std::vector<Diagnosis>& ds) {
    for (const auto& d : ds) sink_(format_diag(d));
  }
  std::mutex mu_;
  Collector collector_;
  DiagSink sink_;
};

class Ticker {
 public:
  Ticker(ServeCore& core, std::int64_t period_ms)
      : thread_([&core, period_ms](std::stop_token tok) {
          std::mutex m;
          std::condition_variable_any cv;
          std::unique_lock lk(m);
          while (!cv.wait_for(lk, tok, std::chrono::milliseconds(period_ms), [] { return false; }),
                 !tok.stop_requested())
            core.tick();
        }) {}

 private:
  std::jthread thread_;
};

}  // namespace detail

struct ServeStats {
  std::size_t malformed = 0;
};

/// Serves one stream (typically standard input) until EOF.
inline ServeStats serve(std::istream& in, const HsaModel& model, const WindowParams& params, DiagSink sink) {
  detail::ServeCore core(model, params, std::move(sink));
  {
    detail::Ticker ticker(core, std::max<std::int64_t>(1, params.silence_ms / 4));
    std::string line;
    while (std::getline(in, line)) core.line(line, 0);
    core.close(0);
  }
  return {core.malformed()};
}

/// Accepts connections on `listener` until `stop` becomes true; one reader
/// thread per connection.
inline ServeStats serve_tcp(const net::Socket& listener, const HsaModel& model, const WindowParams& params,
                            DiagSink sink, const std::atomic<bool>& stop) {
  detail::ServeCore core(model, params, std::move(sink));
  std::vector<std::jthread> readers;
  {
    detail::Ticker ticker(core, std::max<std::int64_t>(1, params.silence_ms / 4));
    int next_source = 1;
    while (!stop.load()) {
      pollfd pfd{listener.get(), POLLIN, 0};
      int rc = ::poll(&pfd, 1, 50);
      if (rc <= 0 || !(pfd.revents & POLLIN)) continue;
      int fd = ::accept(listener.get(), nullptr, nullptr);
      if (fd < 0) continue;
      const int source = next_source++;
      readers.emplace_back([&core, &stop, source, sock = net::Socket(fd)]() mutable {
        std::string buf;
        char chunk[4096];
        while (!stop.load()) {
          pollfd p{sock.get(), POLLIN, 0};
          int r = ::poll(&p, 1, 50);
          if (r == 0) continue;
          if (r < 0) break;
          auto n = ::recv(sock.get(), chunk, sizeof chunk, 0);
          if (n <= 0) break;
          buf.append(chunk, static_cast<std::size_t>(n));
          std::size_t pos;
          while ((pos = buf.find('\n')) != std::string::npos) {
            core.line(std::string_view(buf).substr(0, pos), source);
            buf.erase(0, pos + 1);
          }
        }
        if (!buf.empty()) core.line(buf, source);
        core.close(source);
      });
    }
    for (auto& r : readers) r.join();
  }
  return {core.malformed()};
}

}  // namespace pulsemark
