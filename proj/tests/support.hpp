#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pulsemark/pulsemark.hpp"

namespace pmtest {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("pulsemark-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// Minimum over every monotone path from (0,0) to (n-1,m-1), by explicit
// enumeration. The starting cell contributes nothing.
inline double brute_force_dtw(const std::vector<double>& q, const std::vector<double>& c,
                              pulsemark::CostKind cost, std::optional<std::size_t> band) {
  const long n = static_cast<long>(q.size()), m = static_cast<long>(c.size());
  double best = std::numeric_limits<double>::infinity();
  std::function<void(long, long, double)> walk = [&](long i, long j, double acc) {
    if (band && std::labs(i - j) > static_cast<long>(*band)) return;
    if (i > 0 || j > 0) acc += pulsemark::pointwise_cost(q[i], c[j], cost);
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

inline std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo = 0.0,
                                         double hi = 10.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Small, quick-to-search dataset: every default profile, a few traces per class.
inline pulsemark::Dataset small_dataset(std::size_t per_class = 6, std::uint64_t seed = 42,
                                        double noise_scale = 1.0) {
  auto profiles = pulsemark::default_profiles();
  for (auto& p : profiles) p.noise_sd *= noise_scale;
  return pulsemark::generate_dataset(profiles, per_class, seed);
}

// Serializes every thread of `traces` as HB lines, interleaved by time.
inline std::string as_hb_stream(std::span<const pulsemark::LabeledTrace> traces) {
  struct Line {
    std::int64_t ts;
    std::size_t trace;
    std::string text;
  };
  std::vector<Line> all;
  for (std::size_t t = 0; t < traces.size(); ++t)
    for (const auto& p : traces[t].sequence.points()) {
      const auto ts = pulsemark::to_millis(p.t);
      all.push_back({ts, t,
                     pulsemark::format_record(traces[t].trace_id(), traces[t].sequence.thread_id(), ts,
                                              p.rate)});
    }
  std::stable_sort(all.begin(), all.end(), [](const Line& a, const Line& b) {
    return a.ts != b.ts ? a.ts < b.ts : a.trace < b.trace;
  });
  std::string out;
  for (const auto& l : all) out += l.text;
  return out;
}

}  // namespace pmtest
