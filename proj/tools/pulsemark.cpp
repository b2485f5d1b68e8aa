// pulsemark: simulate -> features -> train -> eval -> diagnose/serve, plus an
// instrumented demo workload.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "pulsemark/pulsemark.hpp"

namespace pm = pulsemark;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

struct CommonOpts {
  std::uint64_t seed = 42;
  std::size_t window = 5;
  std::size_t stride = 5;
  std::string band = "auto";
  std::string cost = "sq";
  std::size_t k = 1;
};

pm::BandPolicy parse_band(const std::string& s) {
  if (s == "auto") return {};
  auto v = pm::detail::parse_number<std::size_t>(s);
  if (!v) throw CLI::ValidationError("--band", "expected 'auto' or a non-negative integer");
  return pm::BandPolicy::of(*v);
}

pm::FeatureConfig feature_config(const CommonOpts& o) {
  pm::FeatureConfig cfg;
  cfg.window = {o.window, o.stride};
  cfg.window.validate();
  cfg.cost = *pm::parse_cost(o.cost);
  cfg.band = parse_band(o.band);
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto part : pm::detail::split(s, ','))
    if (!part.empty()) out.emplace_back(part);
  return out;
}

void add_seed(CLI::App* app, CommonOpts& o) {
  app->add_option("--seed", o.seed, "Master random seed")->envname("PULSEMARK_SEED");
}

void add_feature_opts(CLI::App* app, CommonOpts& o) {
  app->add_option("--window", o.window, "Feature sliding-window size in samples")->check(CLI::PositiveNumber);
  app->add_option("--stride", o.stride, "Feature sliding-window stride")->check(CLI::PositiveNumber);
  app->add_option("--band", o.band, "DTW/LB_Keogh band width in samples, or 'auto' = max(5, ceil(0.1*len))");
  app->add_option("--cost", o.cost, "Pointwise cost shared by DTW and LB_Keogh")
      ->check(CLI::IsMember({"abs", "sq"}));
}

std::vector<pm::WorkloadProfile> select_profiles(const std::string& list, double noise_scale) {
  std::vector<pm::WorkloadProfile> out;
  for (const auto& name : split_list(list)) {
    auto p = pm::find_profile(name);
    if (!p) {
      std::string valid;
      for (const auto& d : pm::default_profiles()) valid += (valid.empty() ? "" : ", ") + d.workload_id;
      throw CLI::ValidationError("--profiles", "unknown profile '" + name + "' (valid: " + valid + ")");
    }
    p->noise_sd *= noise_scale;
    out.push_back(*p);
  }
  if (out.empty()) throw CLI::ValidationError("--profiles", "no profiles selected");
  return out;
}

std::string all_profile_names() {
  std::string s;
  for (const auto& p : pm::default_profiles()) s += (s.empty() ? "" : ",") + p.workload_id;
  return s;
}

/// Records of the first (trace, thread) stream in an HB file, as a sequence.
pm::HeartbeatSequence read_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pm::Error("cannot open " + path);
  std::string line, trace;
  std::int64_t thread = 0;
  std::vector<pm::HeartbeatPoint> pts;
  while (std::getline(in, line)) {
    auto rec = pm::parse_record(line);
    if (!rec) continue;
    if (pts.empty()) {
      trace = rec->trace_id;
      thread = rec->thread_id;
    }
    if (rec->trace_id != trace || rec->thread_id != thread) continue;
    pts.push_back({static_cast<double>(rec->timestamp_ms) / 1000.0, rec->heart_rate});
  }
  if (pts.empty()) throw pm::Error("no HB records in " + path);
  return {trace, thread, std::move(pts)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pulsemark: heartbeat-based anomaly diagnosis for multi-threaded programs"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  // simulate
  CommonOpts sim_o;
  std::string sim_out = "dataset";
  std::string sim_profiles = all_profile_names();
  std::size_t sim_per_class = 50;
  double sim_noise = 1.0;
  auto* sim = app.add_subcommand("simulate", "Generate a labeled synthetic dataset");
  add_seed(sim, sim_o);
  sim->add_option("--out", sim_out, "Output dataset directory");
  sim->add_option("--profiles", sim_profiles, "Comma-separated workload profiles");
  sim->add_option("--per-class", sim_per_class, "Traces per class per profile")->check(CLI::PositiveNumber);
  sim->add_option("--noise-scale", sim_noise, "Multiplier on every profile's noise sd (0 = noise-free)")
      ->check(CLI::NonNegativeNumber);

  // features
  CommonOpts feat_o;
  std::string feat_dataset = "dataset", feat_model, feat_out = "features.csv";
  auto* feat = app.add_subcommand("features", "Write the feature matrix of a dataset");
  add_seed(feat, feat_o);
  add_feature_opts(feat, feat_o);
  feat->add_option("--dataset", feat_dataset, "Dataset directory");
  feat->add_option("--model", feat_model, "Model bundle supplying prototypes (default: fit on the dataset)");
  feat->add_option("--out", feat_out, "Output CSV");

  // train
  CommonOpts train_o;
  std::string train_dataset = "dataset", train_out = "model", train_methods = "LR,NB,DT,RF,HSA";
  auto* train = app.add_subcommand("train", "Fit models on a whole dataset and write a bundle");
  add_seed(train, train_o);
  add_feature_opts(train, train_o);
  train->add_option("--dataset", train_dataset, "Dataset directory");
  train->add_option("--out", train_out, "Output model bundle directory");
  train->add_option("--methods", train_methods, "Comma-separated methods (LR, NB, DT, RF, HSA)");
  train->add_option("--k", train_o.k, "HSA neighbours (odd)");

  // eval
  CommonOpts eval_o;
  std::string eval_dataset = "dataset", eval_out = "report.csv", eval_methods = "LR,NB,DT,RF,HSA";
  double eval_frac = 0.30;
  std::size_t eval_repeats = 3;
  auto* eval = app.add_subcommand("eval", "Repeated stratified train/test evaluation");
  add_seed(eval, eval_o);
  add_feature_opts(eval, eval_o);
  eval->add_option("--dataset", eval_dataset, "Dataset directory");
  eval->add_option("--out", eval_out, "Report CSV path");
  eval->add_option("--methods", eval_methods, "Comma-separated methods (LR, NB, DT, RF, HSA)");
  eval->add_option("--train-frac", eval_frac, "Training fraction per (workload, class) cell")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--repeats", eval_repeats, "Number of random splits averaged")->check(CLI::PositiveNumber);
  eval->add_option("--k", eval_o.k, "HSA neighbours (odd)");

  // serve / diagnose
  pm::WindowParams win;
  std::string serve_model = "model", serve_listen = "-";
  auto* serve = app.add_subcommand("serve", "Diagnose HB streams from stdin or TCP until terminated");
  serve->add_option("--model", serve_model, "Model bundle directory");
  serve->add_option("--listen", serve_listen, "host:port to listen on, or '-' for standard input");
  serve->add_option("--window", win.window, "Samples per diagnosis window")->check(CLI::Range(2, 1 << 20));
  serve->add_option("--stride", win.stride, "Samples between diagnoses")->check(CLI::PositiveNumber);
  serve->add_option("--silence-ms", win.silence_ms, "Silence deadline in ms")->check(CLI::PositiveNumber);

  std::string diag_model = "model", diag_in, diag_out = "-";
  auto* diagnose = app.add_subcommand("diagnose", "Replay a recorded HB file through the collector");
  diagnose->add_option("input", diag_in, "File of HB records")->required();
  diagnose->add_option("--model", diag_model, "Model bundle directory");
  diagnose->add_option("--out", diag_out, "DIAG output file, or '-' for stdout");
  diagnose->add_option("--window", win.window, "Samples per diagnosis window")->check(CLI::Range(2, 1 << 20));
  diagnose->add_option("--stride", win.stride, "Samples between diagnoses")->check(CLI::PositiveNumber);
  diagnose->add_option("--silence-ms", win.silence_ms, "Silence deadline in ms")->check(CLI::PositiveNumber);

  // emit-demo
  pm::DemoConfig demo;
  std::string demo_inject = "none", demo_out = "-", demo_connect;
  std::int64_t demo_interval = 100;
  auto* emit = app.add_subcommand("emit-demo", "Run an instrumented multi-threaded demo and emit heartbeats");
  emit->add_option("--seed", demo.seed, "Seed for busy-work jitter")->envname("PULSEMARK_SEED");
  emit->add_option("--threads", demo.threads, "Worker threads")->check(CLI::PositiveNumber);
  emit->add_option("--inject", demo_inject, "Injected anomaly")->check(CLI::IsMember({"none", "memleak", "shutdown"}));
  emit->add_option("--out", demo_out, "Record file, or '-' for stdout");
  emit->add_option("--connect", demo_connect, "Send records to a collector at host:port instead of --out");
  emit->add_option("--samples", demo.samples, "Run length in flush intervals")->check(CLI::PositiveNumber);
  emit->add_option("--rate", demo.rate, "Target beats/sec per thread")->check(CLI::PositiveNumber);
  emit->add_option("--interval-ms", demo_interval, "Emitter flush interval")->check(CLI::PositiveNumber);
  emit->add_option("--cut", demo.cut, "Fraction of the run after which shutdown threads stop")
      ->check(CLI::Range(0.0, 1.0));
  emit->add_option("--trace-id", demo.trace_id, "Trace id stamped on every record");

  // dist
  CommonOpts dist_o;
  std::string dist_a, dist_b;
  auto* dist = app.add_subcommand("dist", "Print DTW and LB_Keogh between two HB record files");
  dist->add_option("reference", dist_a, "Reference stream (Q)")->required();
  dist->add_option("candidate", dist_b, "Candidate stream (C)")->required();
  dist->add_option("--band", dist_o.band, "Band width in samples, or 'auto'");
  dist->add_option("--cost", dist_o.cost, "Pointwise cost")->check(CLI::IsMember({"abs", "sq"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      auto profiles = select_profiles(sim_profiles, sim_noise);
      auto ds = pm::generate_dataset(profiles, sim_per_class, sim_o.seed);
      ds.metadata["noise_scale"] = pm::detail::format_g(sim_noise, 6);
      pm::save_dataset(ds, sim_out);
      std::printf("wrote %zu traces to %s\n", ds.traces.size(), sim_out.c_str());
    } else if (feat->parsed()) {
      auto cfg = feature_config(feat_o);
      auto ds = pm::load_dataset(feat_dataset);
      pm::PrototypeMap protos;
      if (!feat_model.empty()) {
        auto bundle = pm::load_bundle(feat_model);
        protos = bundle.hsa->prototypes();
      } else {
        protos = pm::fit_prototypes(ds.traces, cfg.cost, cfg.band);
      }
      auto fvs = pm::features_against(ds.traces, protos, cfg);
      std::ofstream out(feat_out, std::ios::binary | std::ios::trunc);
      if (!out) throw pm::Error("cannot write " + feat_out);
      out << "trace_id,label";
      for (auto* n : pm::FeatureVector::kNames) out << ',' << n;
      out << '\n';
      for (std::size_t i = 0; i < ds.traces.size(); ++i) {
        out << ds.traces[i].trace_id() << ',' << pm::to_string(ds.traces[i].label);
        for (double v : fvs[i].values()) out << ',' << pm::detail::format_g(v, 10);
        out << '\n';
      }
      std::printf("wrote %zu feature rows to %s\n", ds.traces.size(), feat_out.c_str());
    } else if (train->parsed()) {
      auto cfg = feature_config(train_o);
      auto ds = pm::load_dataset(train_dataset);
      auto bundle = pm::train_bundle(ds, split_list(train_methods), cfg, train_o.k, train_o.seed);
      pm::save_bundle(bundle, train_out);
      std::printf("wrote model bundle to %s\n", train_out.c_str());
    } else if (eval->parsed()) {
      if (!(eval_frac > 0.0 && eval_frac < 1.0)) throw CLI::ValidationError("--train-frac", "must be in (0, 1)");
      pm::EvalConfig cfg;
      cfg.features = feature_config(eval_o);
      cfg.train_fraction = eval_frac;
      cfg.repeats = eval_repeats;
      cfg.seed = eval_o.seed;
      auto ds = pm::load_dataset(eval_dataset);
      std::vector<std::unique_ptr<pm::Method>> methods;
      for (const auto& name : split_list(eval_methods)) methods.push_back(pm::make_method(name, eval_o.k));
      auto res = pm::evaluate(methods, ds, cfg);
      pm::write_report(res, std::filesystem::path(eval_out));
      std::printf("%-4s %8s %8s %8s %8s\n", "", "macro_f", "w_macro", "accuracy", "anom_rec");
      for (const auto& name : res.methods) {
        const auto& r = res.overall.at(name);
        std::printf("%-4s %8.4f %8.4f %8.4f %8.4f\n", name.c_str(), r.macro_f, r.weighted_macro_f, r.accuracy,
                    r.anomaly_recall);
      }
      for (const auto& name : pm::outperformers_of_hsa(res))
        std::printf("note: %s macro-F exceeds HSA on this run\n", name.c_str());
      std::printf("wrote %s\n", eval_out.c_str());
    } else if (serve->parsed()) {
      auto bundle = pm::load_bundle(serve_model);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::mutex out_mu;
      pm::DiagSink sink = [&](const std::string& line) {
        std::lock_guard lk(out_mu);
        std::fwrite(line.data(), 1, line.size(), stdout);
        std::fflush(stdout);
      };
      pm::ServeStats stats;
      if (serve_listen == "-") {
        stats = pm::serve(std::cin, *bundle.hsa, win, sink);
      } else {
        auto listener = pm::net::listen_tcp(pm::net::parse_endpoint(serve_listen));
        std::fprintf(stderr, "listening on port %u\n", static_cast<unsigned>(pm::net::bound_port(listener)));
        stats = pm::serve_tcp(listener, *bundle.hsa, win, sink, g_stop);
      }
      std::fprintf(stderr, "malformed lines skipped: %zu\n", stats.malformed);
    } else if (diagnose->parsed()) {
      auto bundle = pm::load_bundle(diag_model);
      auto res = pm::replay(std::filesystem::path(diag_in), *bundle.hsa, win);
      std::FILE* out = stdout;
      if (diag_out != "-") {
        out = std::fopen(diag_out.c_str(), "wb");
        if (!out) throw pm::Error("cannot write " + diag_out);
      }
      for (const auto& d : res.diagnoses) {
        auto line = pm::format_diag(d);
        std::fwrite(line.data(), 1, line.size(), out);
      }
      if (out != stdout) std::fclose(out);
      std::fprintf(stderr, "records: %zu, diagnoses: %zu, malformed lines skipped: %zu\n", res.records,
                   res.diagnoses.size(), res.malformed);
    } else if (emit->parsed()) {
      if (demo_inject == "memleak") demo.inject = pm::AnomalyLabel::MemoryLeak;
      else if (demo_inject == "shutdown") demo.inject = pm::AnomalyLabel::Shutdown;
      demo.emitter.flush_interval_ms = demo_interval;
      if (!demo_connect.empty()) demo.emitter.sink = pm::StreamSink{demo_connect};
      else if (demo_out != "-") demo.emitter.sink = pm::FileSink{demo_out};
      auto stats = pm::run_demo(demo);
      std::fprintf(stderr, "beats: %llu, emitted: %llu\n", static_cast<unsigned long long>(stats.beats),
                   static_cast<unsigned long long>(stats.emitted));
    } else if (dist->parsed()) {
      auto q = read_stream(dist_a);
      auto c = read_stream(dist_b);
      auto cost = *pm::parse_cost(dist_o.cost);
      const auto qr = q.rates();
      const auto cr = pm::resample_rates(c.rates(), qr.size());
      const auto w = parse_band(dist_o.band).resolve(qr.size());
      std::printf("length_q=%zu length_c=%zu band=%zu cost=%s\n", q.size(), c.size(), w, dist_o.cost.c_str());
      std::printf("dtw=%.10g\nlb_keogh=%.10g\n", pm::dtw(qr, cr, cost, w), pm::lb_keogh(qr, cr, w, cost));
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
