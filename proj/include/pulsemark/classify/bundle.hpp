#pragma once

// Model bundle directory:
//   manifest.txt          key=value, format_version first
//   hsa/traces.csv ...    HSA training set in the dataset layout
//   hsa/prototypes.csv    workload_id,trace_id
//   baselines/<NAME>.txt  one parameter file per baseline

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "evaluate.hpp"

namespace pulsemark {

inline constexpr int kBundleFormatVersion = 1;

struct ModelBundle {
  FeatureConfig features{};
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::optional<HsaModel> hsa;
  std::map<std::string, BaselineModel> baselines;  // keyed by short name

  std::vector<std::string> method_names() const {
    std::vector<std::string> out;
    for (const auto& [name, m] : baselines) out.push_back(name);
    if (hsa) out.push_back("HSA");
    return out;
  }
};

/// Fits every requested method on the whole dataset. Baseline `name` fits
/// with derive_seed(seed, 3, index of name in `methods`).
inline ModelBundle train_bundle(const Dataset& ds, const std::vector<std::string>& methods,
                                const FeatureConfig& cfg, std::size_t k, std::uint64_t seed,
                                const BaselineHyper& hyper = {}) {
  if (ds.traces.empty()) throw Error("train: empty dataset");
  ModelBundle b;
  b.features = cfg;
  b.k = k;
  b.seed = seed;
  auto prototypes = fit_prototypes(ds.traces, cfg.cost, cfg.band);
  TrainingData data;
  bool need_features = false;
  for (const auto& m : methods) need_features |= (m != "HSA");
  if (need_features) {
    for (const auto& fv : features_against(ds.traces, prototypes, cfg)) data.x.push_back(to_row(fv));
    for (const auto& t : ds.traces) data.y.push_back(t.label);
  }
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const auto& name = methods[i];
    if (name == "HSA") {
      b.hsa.emplace(ds.traces, prototypes, cfg.cost, cfg.band, k);
    } else if (auto kind = parse_baseline(name)) {
      b.baselines.emplace(name, fit_baseline(*kind, data, hyper, derive_seed(seed, 3, i)));
    } else {
      throw Error("unknown method '" + name + "' (valid: LR, NB, DT, RF, HSA)");
    }
  }
  if (!b.hsa) b.hsa.emplace(ds.traces, prototypes, cfg.cost, cfg.band, k);
  return b;
}

inline void save_bundle(const ModelBundle& b, const std::filesystem::path& dir) {
  if (!b.hsa) throw Error("bundle has no HSA model");
  namespace fs = std::filesystem;
  fs::create_directories(dir / "baselines");
  {
    std::ofstream m(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
    if (!m) throw Error("cannot write " + (dir / "manifest.txt").string());
    m << "format_version=" << kBundleFormatVersion << '\n';
    auto names = b.method_names();
    m << "methods=";
    for (std::size_t i = 0; i < names.size(); ++i) m << (i ? "," : "") << names[i];
    m << '\n';
    m << "cost=" << to_string(b.features.cost) << '\n';
    m << "band=" << (b.features.band.fixed ? std::to_string(*b.features.band.fixed) : "auto") << '\n';
    m << "window=" << b.features.window.w << '\n';
    m << "stride=" << b.features.window.stride << '\n';
    m << "k=" << b.k << '\n';
    m << "seed=" << b.seed << '\n';
    if (!m) throw Error("failed writing manifest");
  }
  Dataset training;
  training.traces = b.hsa->training();
  save_dataset(training, dir / "hsa");
  {
    std::ofstream p(dir / "hsa" / "prototypes.csv", std::ios::binary | std::ios::trunc);
    p << "workload_id,trace_id\n";
    for (const auto& [wl, seq] : b.hsa->prototypes()) p << wl << ',' << seq.trace_id() << '\n';
    if (!p) throw Error("failed writing prototypes");
  }
  for (const auto& [name, model] : b.baselines) {
    std::ofstream f(dir / "baselines" / (name + ".txt"), std::ios::binary | std::ios::trunc);
    model.save(f);
    if (!f) throw Error("failed writing baseline " + name);
  }
}

inline ModelBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream m(dir / "manifest.txt");
  if (!m) throw Error("not a model bundle (missing manifest.txt): " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(m, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error("bundle manifest lacks '" + key + "'");
    return it->second;
  };
  auto as_size = [&](const std::string& key) {
    auto v = detail::parse_number<std::size_t>(get(key));
    if (!v) throw Error("bundle manifest: bad value for '" + key + "'");
    return *v;
  };
  if (get("format_version") != std::to_string(kBundleFormatVersion))
    throw Error("unsupported bundle format_version " + get("format_version"));

  ModelBundle b;
  auto cost = parse_cost(get("cost"));
  if (!cost) throw Error("bundle manifest: bad cost");
  b.features.cost = *cost;
  if (get("band") != "auto") b.features.band = BandPolicy::of(as_size("band"));
  b.features.window = {as_size("window"), as_size("stride")};
  b.k = as_size("k");
  auto seed = detail::parse_number<std::uint64_t>(get("seed"));
  if (!seed) throw Error("bundle manifest: bad seed");
  b.seed = *seed;

  auto training = load_dataset(dir / "hsa");
  std::map<std::string, const LabeledTrace*> by_id;
  for (const auto& t : training.traces) by_id[t.trace_id()] = &t;
  PrototypeMap protos;
  {
    std::ifstream p(dir / "hsa" / "prototypes.csv");
    if (!p) throw Error("bundle lacks hsa/prototypes.csv");
    std::getline(p, line);
    while (std::getline(p, line)) {
      if (line.empty()) continue;
      auto f = detail::split(line, ',');
      if (f.size() != 2) throw Error("bad prototypes.csv row: " + line);
      auto it = by_id.find(std::string(f[1]));
      if (it == by_id.end()) throw Error("prototype trace '" + std::string(f[1]) + "' not in bundle");
      protos.emplace(std::string(f[0]), it->second->sequence);
    }
  }
  b.hsa.emplace(training.traces, std::move(protos), b.features.cost, b.features.band, b.k);

  for (auto name : detail::split(get("methods"), ',')) {
    if (name == "HSA" || name.empty()) continue;
    std::ifstream f(dir / "baselines" / (std::string(name) + ".txt"));
    if (!f) throw Error("bundle lacks baseline file for " + std::string(name));
    b.baselines.emplace(std::string(name), BaselineModel::load(f));
  }
  return b;
}

}  // namespace pulsemark
