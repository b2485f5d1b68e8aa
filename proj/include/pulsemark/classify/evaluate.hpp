#pragma once

// Repeated stratified train/test protocol over a labeled dataset, and the
// Table-style report (methods x workloads x classes).

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../features.hpp"
#include "../synth.hpp"
#include "baseline.hpp"
#include "hsa.hpp"
#include "metrics.hpp"

namespace pulsemark {

/// What a method sees at fit time: the training split, the healthy
/// prototypes fitted on it, and each training trace's feature row.
struct TrainingContext {
  std::span<const LabeledTrace> train;
  const PrototypeMap& prototypes;
  const FeatureConfig& features;
  const TrainingData& train_features;
};

class Method {
 public:
  virtual ~Method() = default;
  virtual std::string name() const = 0;
  virtual void fit(const TrainingContext& ctx, std::uint64_t seed) = 0;
  /// `features` is the trace measured against its workload's prototype.
  virtual AnomalyLabel predict(const LabeledTrace& trace, const FeatureVector& features) const = 0;
};

class HsaMethod final : public Method {
 public:
  explicit HsaMethod(std::size_t k = 1) : k_(k) {}
  std::string name() const override { return "HSA"; }
  void fit(const TrainingContext& ctx, std::uint64_t) override {
    model_.emplace(std::vector<LabeledTrace>(ctx.train.begin(), ctx.train.end()), ctx.prototypes,
                   ctx.features.cost, ctx.features.band, k_);
  }
  AnomalyLabel predict(const LabeledTrace& trace, const FeatureVector&) const override {
    return predict_hsa(*model_, trace.sequence).label;
  }
  const HsaModel& model() const { return *model_; }

 private:
  std::size_t k_;
  std::optional<HsaModel> model_;
};

class BaselineMethod final : public Method {
 public:
  explicit BaselineMethod(BaselineKind kind, BaselineHyper hyper = {}) : kind_(kind), hyper_(hyper) {}
  std::string name() const override { return std::string(short_name(kind_)); }
  void fit(const TrainingContext& ctx, std::uint64_t seed) override {
    model_.emplace(fit_baseline(kind_, ctx.train_features, hyper_, seed));
  }
  AnomalyLabel predict(const LabeledTrace&, const FeatureVector& fv) const override {
    return model_->predict(fv);
  }

 private:
  BaselineKind kind_;
  BaselineHyper hyper_;
  std::optional<BaselineModel> model_;
};

inline std::vector<std::string> all_method_names() { return {"LR", "NB", "DT", "RF", "HSA"}; }

inline std::unique_ptr<Method> make_method(std::string_view name, std::size_t hsa_k = 1,
                                           const BaselineHyper& hyper = {}) {
  if (name == "HSA") return std::make_unique<HsaMethod>(hsa_k);
  if (auto k = parse_baseline(name)) return std::make_unique<BaselineMethod>(*k, hyper);
  throw Error("unknown method '" + std::string(name) + "' (valid: LR, NB, DT, RF, HSA)");
}

/// Feature row of every trace against its own workload's prototype.
inline std::vector<FeatureVector> features_against(std::span<const LabeledTrace> traces,
                                                   const PrototypeMap& prototypes,
                                                   const FeatureConfig& cfg) {
  std::vector<FeatureVector> out;
  out.reserve(traces.size());
  for (const auto& tr : traces) {
    auto it = prototypes.find(tr.workload_id);
    if (it == prototypes.end()) throw Error("no prototype for workload '" + tr.workload_id + "'");
    out.push_back(extract(tr.sequence, it->second, cfg));
  }
  return out;
}

struct EvalConfig {
  double train_fraction = 0.30;
  std::size_t repeats = 3;
  std::uint64_t seed = 42;
  FeatureConfig features{};
};

struct Split {
  std::vector<LabeledTrace> train;
  std::vector<LabeledTrace> test;
};

/// Random split stratified by (workload, label) cell: round(fraction * size)
/// traces of each cell go to training, at least one. Redraws (up to 10 times)
/// if some class ends up missing from either side.
inline Split stratified_split(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("train fraction must be in (0, 1)");
  std::map<std::pair<std::string, std::size_t>, std::vector<const LabeledTrace*>> cells;
  for (const auto& tr : ds.traces) cells[{tr.workload_id, label_index(tr.label)}].push_back(&tr);
  for (auto& [key, v] : cells)
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->trace_id() < b->trace_id(); });

  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, attempt));
    Split s;
    for (auto& [key, v] : cells) {
      auto shuffled = v;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(v.size())));
      n_train = std::clamp<std::size_t>(n_train, 1, v.size() > 1 ? v.size() - 1 : 1);
      for (std::size_t i = 0; i < shuffled.size(); ++i)
        (i < n_train ? s.train : s.test).push_back(*shuffled[i]);
    }
    std::array<bool, kLabelCount> in_train{}, in_test{};
    for (const auto& t : s.train) in_train[label_index(t.label)] = true;
    for (const auto& t : s.test) in_test[label_index(t.label)] = true;
    if (std::all_of(in_train.begin(), in_train.end(), [](bool b) { return b; }) &&
        std::all_of(in_test.begin(), in_test.end(), [](bool b) { return b; }))
      return s;
  }
  throw Error("could not draw a split with every class on both sides (need >= 2 traces per class)");
}

struct EvaluationResult {
  std::vector<std::string> methods;
  std::vector<std::string> workloads;
  std::map<std::string, EvalReport> overall;
  std::map<std::string, std::map<std::string, EvalReport>> per_workload;
};

/// Runs the protocol. Repeat r splits with derive_seed(seed, 1, r); method m
/// of repeat r fits with derive_seed(seed, 2, r, m).
inline EvaluationResult evaluate(std::vector<std::unique_ptr<Method>>& methods, const Dataset& ds,
                                 const EvalConfig& cfg) {
  if (methods.empty()) throw Error("evaluate: no methods");
  if (cfg.repeats == 0) throw Error("evaluate: repeats must be >= 1");
  std::array<bool, kLabelCount> present{};
  for (const auto& t : ds.traces) present[label_index(t.label)] = true;
  if (!std::all_of(present.begin(), present.end(), [](bool b) { return b; }))
    throw Error("evaluate: dataset must contain every class");

  EvaluationResult result;
  std::set<std::string> wls;
  for (const auto& t : ds.traces) wls.insert(t.workload_id);
  result.workloads.assign(wls.begin(), wls.end());
  for (const auto& m : methods) result.methods.push_back(m->name());

  std::map<std::string, std::vector<EvalReport>> overall;
  std::map<std::string, std::map<std::string, std::vector<EvalReport>>> per_wl;

  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    auto split = stratified_split(ds, cfg.train_fraction, derive_seed(cfg.seed, 1, r));
    auto prototypes = fit_prototypes(split.train, cfg.features.cost, cfg.features.band);
    TrainingData train_data;
    for (const auto& fv : features_against(split.train, prototypes, cfg.features))
      train_data.x.push_back(to_row(fv));
    for (const auto& t : split.train) train_data.y.push_back(t.label);
    const auto test_features = features_against(split.test, prototypes, cfg.features);

    TrainingContext ctx{split.train, prototypes, cfg.features, train_data};
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto& method = *methods[m];
      method.fit(ctx, derive_seed(cfg.seed, 2, r, m));
      ConfusionMatrix all;
      std::map<std::string, ConfusionMatrix> by_wl;
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        const auto& tr = split.test[i];
        auto pred = method.predict(tr, test_features[i]);
        all.add(tr.label, pred);
        by_wl[tr.workload_id].add(tr.label, pred);
      }
      overall[method.name()].push_back(metrics(all));
      for (const auto& [wl, cm] : by_wl) per_wl[method.name()][wl].push_back(metrics(cm));
    }
  }
  for (const auto& name : result.methods) {
    result.overall[name] = average(overall[name]);
    for (const auto& [wl, reps] : per_wl[name]) result.per_workload[name][wl] = average(reps);
  }
  return result;
}

/// Methods whose macro-F beats HSA's on the same run.
inline std::vector<std::string> outperformers_of_hsa(const EvaluationResult& res) {
  std::vector<std::string> out;
  auto hsa = res.overall.find("HSA");
  if (hsa == res.overall.end()) return out;
  for (const auto& name : res.methods)
    if (name != "HSA" && res.overall.at(name).macro_f > hsa->second.macro_f) out.push_back(name);
  return out;
}

inline std::string report_header(const EvaluationResult& res) {
  std::string h = "method";
  for (const auto& wl : res.workloads) h += "," + wl + "_N," + wl + "_A," + wl + "_S";
  h += ",all_N,all_A,all_S,macro_f,weighted_macro_f,accuracy,anomaly_recall,flags";
  return h;
}

/// One row per method: per-workload F for (normal, memleak, shutdown), the
/// same over all workloads, then overall scores. The HSA row's flags column lists any method that beat it.
inline void write_report(const EvaluationResult& res, std::ostream& os) {
  auto f4 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  os << report_header(res) << '\n';
  const auto beaten_by = outperformers_of_hsa(res);
  for (const auto& name : res.methods) {
    os << name;
    for (const auto& wl : res.workloads) {
      const auto& rep = res.per_workload.at(name).at(wl);
      for (std::size_t k = 0; k < kLabelCount; ++k) os << ',' << f4(rep.per_class[k].f);
    }
    const auto& o = res.overall.at(name);
    for (std::size_t k = 0; k < kLabelCount; ++k) os << ',' << f4(o.per_class[k].f);
    os << ',' << f4(o.macro_f) << ',' << f4(o.weighted_macro_f) << ',' << f4(o.accuracy) << ','
       << f4(o.anomaly_recall) << ',';
    if (name == "HSA" && !beaten_by.empty()) {
      os << "outperformed_by=";
      for (std::size_t i = 0; i < beaten_by.size(); ++i) os << (i ? ";" : "") << beaten_by[i];
    }
    os << '\n';
  }
}

inline void write_report(const EvaluationResult& res, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write report " + path.string());
  write_report(res, os);
  if (!os) throw Error("failed writing report " + path.string());
}

}  // namespace pulsemark
