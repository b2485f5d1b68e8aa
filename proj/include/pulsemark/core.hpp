#pragma once

// Data model shared by every pulsemark module: heartbeat sequences, labeled
// traces, datasets and their on-disk CSV layout.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pulsemark {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Whitespace tokenizer for the line protocols.
inline std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) return std::nullopt;
  }
  return value;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::none_of(s.begin(), s.end(), [](char c) {
    return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

}  // namespace detail

/// Anomaly classes. The set is closed; the wire strings are fixed.
enum class AnomalyLabel : std::uint8_t { Normal = 0, MemoryLeak = 1, Shutdown = 2 };

inline constexpr std::size_t kLabelCount = 3;
inline constexpr AnomalyLabel kAllLabels[kLabelCount] = {
    AnomalyLabel::Normal, AnomalyLabel::MemoryLeak, AnomalyLabel::Shutdown};

inline std::string_view to_string(AnomalyLabel label) {
  switch (label) {
    case AnomalyLabel::Normal: return "normal";
    case AnomalyLabel::MemoryLeak: return "memleak";
    case AnomalyLabel::Shutdown: return "shutdown";
  }
  return "normal";
}

inline std::optional<AnomalyLabel> parse_label(std::string_view s) {
  if (s == "normal") return AnomalyLabel::Normal;
  if (s == "memleak") return AnomalyLabel::MemoryLeak;
  if (s == "shutdown") return AnomalyLabel::Shutdown;
  return std::nullopt;
}

inline std::size_t label_index(AnomalyLabel label) { return static_cast<std::size_t>(label); }

/// Lexicographic order of the wire strings, used as the deterministic tie rule
/// by the voting classifiers.
inline bool label_name_less(AnomalyLabel a, AnomalyLabel b) { return to_string(a) < to_string(b); }

/// One emitted heartbeat record.
struct HeartbeatSample {
  std::int64_t thread_id = 0;
  std::int64_t timestamp_ms = 0;
  double heart_rate = 0.0;
};

struct HeartbeatPoint {
  double t = 0.0;     // seconds since trace start
  double rate = 0.0;  // beats per second
  friend bool operator==(const HeartbeatPoint&, const HeartbeatPoint&) = default;
};

/// Ordered (time, rate) series of one thread. Timestamps are strictly
/// increasing and the sequence is never empty.
class HeartbeatSequence {
 public:
  HeartbeatSequence() = default;

  HeartbeatSequence(std::string trace_id, std::int64_t thread_id, std::vector<HeartbeatPoint> points)
      : trace_id_(std::move(trace_id)), thread_id_(thread_id), points_(std::move(points)) {
    if (points_.empty()) throw Error("heartbeat sequence '" + trace_id_ + "' is empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (!std::isfinite(p.t) || !std::isfinite(p.rate) || p.t < 0.0 || p.rate < 0.0)
        throw Error("heartbeat sequence '" + trace_id_ + "' has an invalid point at index " +
                    std::to_string(i));
      if (i > 0 && !(points_[i - 1].t < p.t))
        throw Error("heartbeat sequence '" + trace_id_ +
                    "' has non-increasing timestamps at index " + std::to_string(i));
    }
  }

  /// Convenience for rate-only series on a uniform grid.
  static HeartbeatSequence from_rates(std::string trace_id, const std::vector<double>& rates,
                                      double delta_s = 1.0) {
    std::vector<HeartbeatPoint> pts;
    pts.reserve(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i)
      pts.push_back({static_cast<double>(i) * delta_s, rates[i]});
    return {std::move(trace_id), 0, std::move(pts)};
  }

  const std::string& trace_id() const { return trace_id_; }
  std::int64_t thread_id() const { return thread_id_; }
  const std::vector<HeartbeatPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const HeartbeatPoint& operator[](std::size_t i) const { return points_[i]; }
  double completion_time() const { return points_.back().t; }

  std::vector<double> rates() const {
    std::vector<double> r;
    r.reserve(points_.size());
    for (const auto& p : points_) r.push_back(p.rate);
    return r;
  }

  friend bool operator==(const HeartbeatSequence&, const HeartbeatSequence&) = default;

 private:
  std::string trace_id_;
  std::int64_t thread_id_ = 0;
  std::vector<HeartbeatPoint> points_{{0.0, 0.0}};
};

struct LabeledTrace {
  HeartbeatSequence sequence;
  std::string workload_id;
  AnomalyLabel label = AnomalyLabel::Normal;

  const std::string& trace_id() const { return sequence.trace_id(); }
  friend bool operator==(const LabeledTrace&, const LabeledTrace&) = default;
};

struct Dataset {
  std::vector<LabeledTrace> traces;
  /// Free-form generator metadata (seed, creation parameters), kept sorted.
  std::map<std::string, std::string> metadata;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Fixed-size sliding window advanced by `stride`.
struct WindowSpec {
  std::size_t w = 5;
  std::size_t stride = 5;

  void validate() const {
    if (w < 1) throw Error("window size must be >= 1");
    if (stride < 1) throw Error("window stride must be >= 1");
  }

  /// Number of windows over a usable length L: floor((L - w) / stride) + 1, or 0 when L < w.
  std::size_t count(std::size_t usable_length) const {
    if (usable_length < w) return 0;
    return (usable_length - w) / stride + 1;
  }
};

/// Linear interpolation of `seq` onto t = 0, delta, 2*delta, ... up to the last
/// original timestamp. Endpoint rates are preserved.
inline HeartbeatSequence resample_uniform(const HeartbeatSequence& seq, double delta) {
  if (seq.size() < 2) throw Error("resample_uniform needs at least two points");
  if (!(delta > 0.0)) throw Error("resample_uniform needs delta > 0");
  const auto& pts = seq.points();
  const double t_end = pts.back().t;
  std::vector<HeartbeatPoint> out;
  std::size_t seg = 0;
  // Grid times are computed as k*delta (not accumulated) so the output is idempotent.
  for (std::size_t k = 0;; ++k) {
    double t = static_cast<double>(k) * delta;
    // Treat grid points within rounding of the end as the end itself.
    if (t > t_end * (1.0 + 1e-12) + 1e-12) break;
    if (t < pts.front().t) {
      out.push_back({t, pts.front().rate});
      continue;
    }
    while (seg + 1 < pts.size() && pts[seg + 1].t < t) ++seg;
    if (seg + 1 >= pts.size()) {
      out.push_back({t, pts.back().rate});
      break;
    }
    const auto& a = pts[seg];
    const auto& b = pts[seg + 1];
    double r;
    if (t == b.t) {
      r = b.rate;
    } else if (t == a.t) {
      r = a.rate;
    } else {
      double frac = (t - a.t) / (b.t - a.t);
      r = a.rate + (b.rate - a.rate) * frac;
    }
    out.push_back({t, r});
  }
  return {seq.trace_id(), seq.thread_id(), std::move(out)};
}

// ---------------------------------------------------------------------------
// Dataset persistence: <dir>/traces.csv, <dir>/samples.csv, optional <dir>/meta.txt

inline constexpr std::string_view kTracesHeader = "trace_id,workload_id,thread_id,label";
inline constexpr std::string_view kSamplesHeader = "trace_id,thread_id,timestamp_ms,heart_rate";

inline std::int64_t to_millis(double seconds) { return std::llround(seconds * 1000.0); }

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::set<std::string> ids;
  for (const auto& tr : ds.traces) {
    if (!ids.insert(tr.trace_id()).second)
      throw Error("duplicate trace_id '" + tr.trace_id() + "'");
    if (!detail::is_identifier(tr.trace_id()) || !detail::is_identifier(tr.workload_id))
      throw Error("trace_id/workload_id must be non-empty and free of commas and whitespace: '" +
                  tr.trace_id() + "'");
  }
  for (const auto& [k, v] : ds.metadata)
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw Error("metadata entries must not contain '=' in keys or newlines");

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create dataset directory " + dir.string() + ": " + ec.message());

  std::vector<const LabeledTrace*> order;
  for (const auto& tr : ds.traces) order.push_back(&tr);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
    return std::pair(a->trace_id(), a->sequence.thread_id()) <
           std::pair(b->trace_id(), b->sequence.thread_id());
  });

  std::ofstream traces(dir / "traces.csv", std::ios::binary | std::ios::trunc);
  std::ofstream samples(dir / "samples.csv", std::ios::binary | std::ios::trunc);
  if (!traces || !samples) throw Error("cannot write dataset files in " + dir.string());
  traces << kTracesHeader << '\n';
  samples << kSamplesHeader << '\n';
  for (const auto* tr : order) {
    traces << tr->trace_id() << ',' << tr->workload_id << ',' << tr->sequence.thread_id() << ','
           << to_string(tr->label) << '\n';
    for (const auto& p : tr->sequence.points())
      samples << tr->trace_id() << ',' << tr->sequence.thread_id() << ',' << to_millis(p.t) << ','
              << detail::format_g(p.rate, 6) << '\n';
  }
  if (!ds.metadata.empty()) {
    std::ofstream meta(dir / "meta.txt", std::ios::binary | std::ios::trunc);
    for (const auto& [k, v] : ds.metadata) meta << k << '=' << v << '\n';
    if (!meta) throw Error("failed writing " + (dir / "meta.txt").string());
  } else {
    std::filesystem::remove(dir / "meta.txt", ec);
  }
  traces.flush();
  samples.flush();
  if (!traces || !samples) throw Error("failed writing dataset files in " + dir.string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw Error("missing dataset file " + (dir / name).string());
    return in;
  };
  auto fail = [&](const char* name, std::size_t line, const std::string& what) -> Error {
    return Error((dir / name).string() + ":" + std::to_string(line) + ": " + what);
  };
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };

  struct Header {
    std::string workload;
    std::int64_t thread_id;
    AnomalyLabel label;
  };
  std::vector<std::string> order;
  std::map<std::string, Header> headers;
  {
    auto in = open("traces.csv");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw fail("traces.csv", 1, "missing header");
    ++lineno;
    strip_cr(line);
    if (line != kTracesHeader) throw fail("traces.csv", 1, "unexpected header '" + line + "'");
    while (std::getline(in, line)) {
      ++lineno;
      strip_cr(line);
      if (line.empty()) continue;
      auto f = detail::split(line, ',');
      if (f.size() != 4) throw fail("traces.csv", lineno, "expected 4 fields");
      auto tid = detail::parse_number<std::int64_t>(f[2]);
      if (!tid) throw fail("traces.csv", lineno, "bad thread_id");
      auto label = parse_label(f[3]);
      if (!label) throw fail("traces.csv", lineno, "unknown label '" + std::string(f[3]) + "'");
      if (f[0].empty() || f[1].empty()) throw fail("traces.csv", lineno, "empty id");
      std::string id(f[0]);
      if (!headers.emplace(id, Header{std::string(f[1]), *tid, *label}).second)
        throw fail("traces.csv", lineno, "duplicate trace_id '" + id + "'");
      order.push_back(id);
    }
  }

  std::map<std::string, std::vector<std::pair<std::int64_t, double>>> rows;
  {
    auto in = open("samples.csv");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw fail("samples.csv", 1, "missing header");
    ++lineno;
    strip_cr(line);
    if (line != kSamplesHeader) throw fail("samples.csv", 1, "unexpected header '" + line + "'");
    while (std::getline(in, line)) {
      ++lineno;
      strip_cr(line);
      if (line.empty()) continue;
      auto f = detail::split(line, ',');
      if (f.size() != 4) throw fail("samples.csv", lineno, "expected 4 fields");
      std::string id(f[0]);
      auto h = headers.find(id);
      if (h == headers.end()) throw fail("samples.csv", lineno, "unknown trace_id '" + id + "'");
      auto tid = detail::parse_number<std::int64_t>(f[1]);
      auto ts = detail::parse_number<std::int64_t>(f[2]);
      auto rate = detail::parse_number<double>(f[3]);
      if (!tid || !ts || !rate) throw fail("samples.csv", lineno, "malformed number");
      if (*tid != h->second.thread_id) throw fail("samples.csv", lineno, "thread_id mismatch");
      if (*ts < 0 || *rate < 0.0) throw fail("samples.csv", lineno, "negative timestamp or rate");
      rows[id].emplace_back(*ts, *rate);
    }
  }

  Dataset ds;
  for (const auto& id : order) {
    auto& pts = rows[id];
    if (pts.empty()) throw Error("trace has no samples: '" + id + "'");
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (pts[i].first == pts[i - 1].first)
        throw Error("non-monotone timestamps in trace '" + id + "'");
    std::vector<HeartbeatPoint> seq;
    seq.reserve(pts.size());
    for (auto [ms, r] : pts) seq.push_back({static_cast<double>(ms) / 1000.0, r});
    const auto& h = headers.at(id);
    ds.traces.push_back({HeartbeatSequence(id, h.thread_id, std::move(seq)), h.workload, h.label});
  }
  std::sort(ds.traces.begin(), ds.traces.end(), [](const auto& a, const auto& b) {
    return a.trace_id() < b.trace_id();
  });

  if (std::ifstream meta(dir / "meta.txt"); meta) {
    std::string line;
    while (std::getline(meta, line)) {
      strip_cr(line);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      ds.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return ds;
}

}  // namespace pulsemark
