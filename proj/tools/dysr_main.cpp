// dysr: train, evaluate and query the dynamic service-graph recommender.
//
// Subcommands: train, eval, recommend, gradcheck, synth. Options resolve in
// the order defaults < config file < --set overrides < explicit flags; the
// config file is flat key=value text. Environment variables are never
// consulted.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dysr/checkpoint.hpp"
#include "dysr/data.hpp"
#include "dysr/eval.hpp"
#include "dysr/gradcheck_suite.hpp"
#include "dysr/manifest.hpp"
#include "dysr/trainer.hpp"
#include "dysr/version.hpp"

namespace fs = std::filesystem;
using namespace dysr;

namespace {

// ---------------------------------------------------------------------------
// Settings: flat key=value config with override layers
// ---------------------------------------------------------------------------

class Settings {
 public:
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config " + path + " line " + std::to_string(lineno) +
                                 ": expected key=value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void apply_overrides(const std::vector<std::string>& kvs) {
    for (const std::string& kv : kvs) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("--set expects key=value, got '" + kv + "'");
      set(kv.substr(0, eq), kv.substr(eq + 1));
    }
  }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::runtime_error("missing required config key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  long get_long(const std::string& key, long dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : std::stol(it->second);
  }

  double get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : std::stod(it->second);
  }

  bool get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config key '" + key + "' is not a boolean: '" + v + "'");
  }

  const std::map<std::string, std::string>& all() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

std::vector<int> parse_n_list(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int a = std::stoi(tok.substr(0, dash));
      const int b = std::stoi(tok.substr(dash + 1));
      for (int n = a; n <= b; ++n) out.push_back(n);
    } else if (!tok.empty()) {
      out.push_back(std::stoi(tok));
    }
  }
  if (out.empty()) throw std::runtime_error("empty N list: '" + spec + "'");
  return out;
}

TrainConfig train_config_from(const Settings& s) {
  TrainConfig cfg;
  cfg.epochs = static_cast<int>(s.get_long("epochs", cfg.epochs));
  cfg.batch_size = static_cast<int>(s.get_long("batch_size", cfg.batch_size));
  cfg.clip = s.get_double("clip", cfg.clip);
  cfg.lr1 = s.get_double("lr1", cfg.lr1);
  cfg.lr2 = s.get_double("lr2", cfg.lr2);
  cfg.negative_factor = static_cast<int>(s.get_long("negative_factor", cfg.negative_factor));
  cfg.nonevent_factor = static_cast<int>(s.get_long("nonevent_factor", cfg.nonevent_factor));
  cfg.time_scale = s.get_double("time_scale", cfg.time_scale);
  const std::string act = s.get_or("activation", "tanh");
  if (act == "tanh")
    cfg.activation = Activation::kTanh;
  else if (act == "logistic")
    cfg.activation = Activation::kLogistic;
  else
    throw std::runtime_error("unknown activation '" + act + "' (tanh|logistic)");
  const std::string form = s.get_or("nonevent_form", "survival");
  if (form == "survival")
    cfg.nonevent_form = NoneventForm::kSurvival;
  else if (form == "paper-literal")
    cfg.nonevent_form = NoneventForm::kPaperLiteral;
  else
    throw std::runtime_error("unknown nonevent_form '" + form + "' (survival|paper-literal)");
  cfg.patience = static_cast<int>(s.get_long("patience", cfg.patience));
  cfg.validation_fraction = s.get_double("validation_fraction", cfg.validation_fraction);
  cfg.seed = static_cast<std::uint64_t>(s.get_long("seed", 1));
  cfg.ablation.rand_init = s.get_bool("rand_init", false);
  cfg.ablation.static_z = s.get_bool("static_z", false);
  cfg.ablation.no_transform = s.get_bool("no_transform", false);
  return cfg;
}

Corpus load_corpus_from(const Settings& s, RunManifest& manifest) {
  const std::string mashups = s.get("mashups");
  const std::string services = s.get("services");
  const std::string req_emb = s.get("req_embeddings");
  const std::string svc_emb = s.get("svc_embeddings");
  for (const std::string& p : {mashups, services, req_emb, svc_emb}) manifest.add_input(p);
  return load_corpus(mashups, services, req_emb, svc_emb);
}

EvalOptions eval_options_from(const Settings& s) {
  EvalOptions opt;
  const std::string mode = s.get_or("mode", "prequential");
  if (mode == "prequential")
    opt.mode = EvalMode::kPrequential;
  else if (mode == "frozen")
    opt.mode = EvalMode::kFrozen;
  else
    throw std::runtime_error("unknown eval mode '" + mode + "' (prequential|frozen)");
  opt.paper_literal_f1 = s.get_bool("paper_literal_f1", false);
  opt.n_list = parse_n_list(s.get_or("n_list", "1-10"));
  return opt;
}

void record_config(RunManifest& manifest, const Settings& s) {
  for (const auto& [k, v] : s.all()) manifest.config[k] = v;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const Settings& s) {
  const fs::path out_dir = s.get_or("out_dir", "out");
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.command = "train";
  record_config(manifest, s);

  const Corpus corpus = load_corpus_from(s, manifest);
  const std::size_t n_init = static_cast<std::size_t>(s.get_long("n_init", 300));
  const std::size_t n_train = static_cast<std::size_t>(s.get_long("n_train", 2400));
  const CorpusSplit split = split_temporal(corpus.samples, n_init, n_train);

  TrainConfig cfg = train_config_from(s);
  const int n_seeds = static_cast<int>(s.get_long("seeds", 1));
  EvalOptions eval_opt = eval_options_from(s);

  nlohmann::json report_json;
  report_json["ingest"] = {{"raw_mashups", corpus.report.raw_mashups},
                           {"dropped_small", corpus.report.dropped_small},
                           {"dropped_unused_services", corpus.report.dropped_unused_services},
                           {"service_filter_scope", corpus.report.service_filter_scope}};

  auto train_report_json = [](const TrainReport& r) {
    nlohmann::json j;
    j["epoch_l1"] = r.epoch_l1;
    j["epoch_l2"] = r.epoch_l2;
    j["val_f1_trace"] = r.val_f1_trace;
    j["best_epoch"] = r.best_epoch;
    j["wall_seconds"] = r.wall_seconds;
    j["seed"] = r.seed;
    j["max_clipped_grad"] = r.max_clipped_grad;
    return j;
  };

  std::vector<std::string> service_ids;
  for (const ServiceRecord& svc : corpus.services) service_ids.push_back(svc.id);

  if (n_seeds <= 1) {
    DynamicGraphState state;
    RecParams rec;
    DyRepParams dy;
    const SeedOutcome outcome =
        run_single(split, corpus.services, corpus.d_s(), cfg, eval_opt, &state, &rec, &dy);

    const std::string ckpt = (out_dir / "checkpoint.bin").string();
    const std::string graph = (out_dir / "graph.json").string();
    save_tensors(ckpt, params_to_tensors(rec, dy));
    save_graph(graph, state, service_ids);
    const std::string metrics_path = (out_dir / "metrics.csv").string();
    write_metrics_csv(metrics_path, {outcome.metrics});
    const std::string detail_path = (out_dir / "details.jsonl").string();
    write_detail_jsonl(detail_path, outcome.metrics);

    report_json["train"] = train_report_json(outcome.report);
    manifest.seeds = {cfg.seed};
    manifest.artifacts = {ckpt, graph, (out_dir / "graph_z.bin").string(), metrics_path,
                          detail_path};
  } else {
    const MultiSeedReport multi =
        run_seeds(split, corpus.services, corpus.d_s(), cfg, n_seeds, eval_opt);
    // Aggregate CSV with mean and per-seed rows.
    MetricsReport agg;
    agg.mode = std::string(eval_mode_name(eval_opt.mode)) + "-mean";
    agg.n_list = eval_opt.n_list;
    agg.mean = multi.mean;
    std::map<std::string, std::map<int, MetricTriple>> stds;
    stds[agg.mode] = multi.stddev;
    const std::string metrics_path = (out_dir / "metrics.csv").string();
    write_metrics_csv(metrics_path, {agg}, &stds);
    manifest.artifacts.push_back(metrics_path);

    nlohmann::json per_seed = nlohmann::json::array();
    for (const SeedOutcome& run : multi.runs) {
      per_seed.push_back(train_report_json(run.report));
      manifest.seeds.push_back(run.seed);
    }
    report_json["train_per_seed"] = std::move(per_seed);

    // Re-run the first seed to persist its artifacts.
    DynamicGraphState state;
    RecParams rec;
    DyRepParams dy;
    run_single(split, corpus.services, corpus.d_s(), cfg, eval_opt, &state, &rec, &dy);
    const std::string ckpt = (out_dir / "checkpoint.bin").string();
    const std::string graph = (out_dir / "graph.json").string();
    save_tensors(ckpt, params_to_tensors(rec, dy));
    save_graph(graph, state, service_ids);
    manifest.artifacts.push_back(ckpt);
    manifest.artifacts.push_back(graph);
  }

  const std::string report_path = (out_dir / "report.json").string();
  {
    std::ofstream out(report_path);
    out << report_json.dump(2) << '\n';
  }
  manifest.artifacts.push_back(report_path);
  manifest.write((out_dir / "manifest.json").string());
  std::cout << "train: wrote artifacts to " << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const Settings& s, const std::string& checkpoint, const std::string& graph,
             bool with_baseline) {
  const fs::path out_dir = s.get_or("out_dir", "out");
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.command = "eval";
  record_config(manifest, s);
  manifest.add_input(checkpoint);
  manifest.add_input(graph);

  auto [rec, dy] = params_from_tensors(load_tensors(checkpoint));
  auto [state, ids] = load_graph(graph);

  const Corpus corpus = load_corpus_from(s, manifest);
  if (corpus.services.size() != ids.size())
    throw std::runtime_error("graph checkpoint has " + std::to_string(ids.size()) +
                             " services but corpus has " +
                             std::to_string(corpus.services.size()));
  if (corpus.d_s() != dy.dim())
    throw std::runtime_error("tensor dyrep.w_t expects d_s=" + std::to_string(dy.dim()) +
                             " but corpus embeddings have d_s=" +
                             std::to_string(corpus.d_s()));
  if (corpus.d_r() != rec.d_r())
    throw std::runtime_error("tensor " +
                             std::string(rec.no_transform ? "recommend.w_lambda"
                                                          : "recommend.w_psi") +
                             " expects d_r=" + std::to_string(rec.d_r()) +
                             " but corpus embeddings have d_r=" + std::to_string(corpus.d_r()));
  const std::size_t n_init = static_cast<std::size_t>(s.get_long("n_init", 300));
  const std::size_t n_train = static_cast<std::size_t>(s.get_long("n_train", 2400));
  const CorpusSplit split = split_temporal(corpus.samples, n_init, n_train);

  EvalOptions opt = eval_options_from(s);
  opt.static_z = s.get_bool("static_z", false);
  const MetricsReport report = evaluate(split.test, state, rec, dy, opt);

  std::vector<MetricsReport> reports{report};
  if (with_baseline)
    reports.push_back(popularity_baseline(split.train, split.test,
                                          static_cast<int>(corpus.services.size()), opt));

  const std::string metrics_path = (out_dir / "metrics.csv").string();
  write_metrics_csv(metrics_path, reports);
  const std::string detail_path = (out_dir / "details.jsonl").string();
  write_detail_jsonl(detail_path, report);
  manifest.artifacts = {metrics_path, detail_path};
  manifest.write((out_dir / "manifest.json").string());
  std::cout << "eval: wrote " << metrics_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// recommend
// ---------------------------------------------------------------------------

int cmd_recommend(const std::string& checkpoint, const std::string& graph,
                  const std::string& requirements, int n, const std::string& out_path) {
  auto [rec, dy] = params_from_tensors(load_tensors(checkpoint));
  auto [state, ids] = load_graph(graph);

  std::vector<std::string> req_ids;
  std::vector<DenseVector> rows;
  if (ends_with_csv(requirements)) {
    auto [cids, crows] = read_embeddings_csv(requirements);
    req_ids = std::move(cids);
    rows = std::move(crows);
  } else {
    rows = read_embeddings_binary(requirements);
    for (std::size_t i = 0; i < rows.size(); ++i) req_ids.push_back("r" + std::to_string(i));
  }
  if (!rows.empty() && rows.front().size() != rec.d_r())
    throw std::runtime_error("requirement embedding dimension " +
                             std::to_string(rows.front().size()) + " does not match model d_r=" +
                             std::to_string(rec.d_r()));

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot open output file: " + out_path);
    out = &file;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ranked = rank_services(rec, rows[i], state.representations(),
                                      static_cast<std::size_t>(n));
    nlohmann::json j;
    j["requirement_id"] = req_ids[i];
    nlohmann::json arr = nlohmann::json::array();
    for (const ScoredService& sc : ranked)
      arr.push_back({{"service_id", ids.at(sc.service)}, {"score", sc.score},
                     {"prob", sc.prob}});
    j["ranked"] = std::move(arr);
    (*out) << j.dump() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int cmd_gradcheck(const GradCheckOptions& opt) {
  const auto rows = run_gradcheck(opt);
  bool all_ok = true;
  std::printf("%-22s %-14s %s\n", "tensor", "max_rel_err", "status");
  for (const GradCheckRow& r : rows) {
    std::printf("%-22s %-14.3e %s\n", r.tensor.c_str(), r.max_rel_err, r.ok ? "ok" : "FAIL");
    all_ok = all_ok && r.ok;
  }
  if (!all_ok) {
    std::cerr << "error: gradcheck: analytic/numeric gradient mismatch above tolerance\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(int k, int s_per, int r, std::size_t d_r, std::size_t d_s, double noise,
              std::uint64_t seed, const std::string& out_dir_raw) {
  const fs::path out_dir = out_dir_raw;
  fs::create_directories(out_dir);
  const SyntheticCorpus corpus = generate_synthetic(k, s_per, r, d_r, d_s, noise, seed);

  const std::string mashups = (out_dir / "mashups.jsonl").string();
  const std::string services = (out_dir / "services.csv").string();
  const std::string req_emb = (out_dir / "req_embeddings.bin").string();
  const std::string svc_emb = (out_dir / "svc_embeddings.bin").string();
  const std::string truth = (out_dir / "ground_truth.json").string();

  write_mashups_jsonl(mashups, corpus.samples, corpus.services, corpus.epoch_days);
  write_services_csv(services, corpus.services);
  std::vector<DenseVector> req_rows;
  for (const auto& s : corpus.samples) req_rows.push_back(s.v_r);
  write_embeddings_binary(req_emb, req_rows);
  std::vector<DenseVector> svc_rows;
  for (const auto& s : corpus.services) svc_rows.push_back(s.z0);
  write_embeddings_binary(svc_emb, svc_rows);
  write_ground_truth_json(truth, corpus.truth);

  RunManifest manifest;
  manifest.command = "synth";
  manifest.config = {{"k", std::to_string(k)},         {"s", std::to_string(s_per)},
                     {"r", std::to_string(r)},         {"d_r", std::to_string(d_r)},
                     {"d_s", std::to_string(d_s)},     {"noise", std::to_string(noise)},
                     {"seed", std::to_string(seed)}};
  manifest.seeds = {seed};
  manifest.artifacts = {mashups, services, req_emb, svc_emb, truth};
  manifest.write((out_dir / "manifest.json").string());
  std::cout << "synth: wrote corpus with " << corpus.services.size() << " services and "
            << corpus.samples.size() << " samples to " << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic service-graph bundle recommender"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // Shared config plumbing.
  std::string config_path;
  std::vector<std::string> overrides;

  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    cmd->add_option("--set", overrides, "override a config key (key=value, repeatable)");
  };

  // train
  auto* train_cmd = app.add_subcommand("train", "run the alternating training loop");
  add_config_opts(train_cmd);
  std::vector<std::string> ablations;
  train_cmd->add_option("--ablation", ablations,
                        "ablation switch: rand_init | static_z | no_transform (repeatable)");
  std::string train_out;
  train_cmd->add_option("--out-dir", train_out, "artifact directory");
  long train_seed = -1;
  train_cmd->add_option("--seed", train_seed, "master seed");
  long train_seeds = -1;
  train_cmd->add_option("--seeds", train_seeds, "number of independent seeded runs");
  long train_epochs = -1;
  train_cmd->add_option("--epochs", train_epochs, "training epochs");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_config_opts(eval_cmd);
  std::string eval_ckpt, eval_graph, eval_mode, eval_nlist, eval_out;
  bool eval_baseline = false, eval_plf1 = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "parameter checkpoint")->required();
  eval_cmd->add_option("--graph", eval_graph, "graph checkpoint (json)")->required();
  eval_cmd->add_option("--mode", eval_mode, "prequential | frozen");
  eval_cmd->add_option("--n-list", eval_nlist, "N values, e.g. 1-10 or 1,5,10");
  eval_cmd->add_option("--out-dir", eval_out, "artifact directory");
  eval_cmd->add_flag("--baseline", eval_baseline, "also emit popularity-baseline rows");
  eval_cmd->add_flag("--paper-literal-f1", eval_plf1,
                     "use the printed-form F1 without the factor two");

  // recommend
  auto* rec_cmd = app.add_subcommand("recommend", "rank services for requirement vectors");
  std::string rec_ckpt, rec_graph, rec_reqs, rec_out;
  int rec_n = 5;
  rec_cmd->add_option("--checkpoint", rec_ckpt, "parameter checkpoint")->required();
  rec_cmd->add_option("--graph", rec_graph, "graph checkpoint (json)")->required();
  rec_cmd->add_option("--requirements", rec_reqs, "requirement embedding file (bin or csv)")
      ->required();
  rec_cmd->add_option("--n", rec_n, "recommendations per requirement");
  rec_cmd->add_option("--out", rec_out, "output JSONL path ('-' for stdout)");

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "verify analytic gradients of both losses");
  GradCheckOptions gc;
  gc_cmd->add_option("--instances", gc.instances, "randomized instances");
  gc_cmd->add_option("--seed", gc.seed, "base seed");
  gc_cmd->add_option("--d-r", gc.d_r, "requirement dimension");
  gc_cmd->add_option("--d-s", gc.d_s, "service dimension");
  gc_cmd->add_option("--services", gc.services, "services per instance");
  gc_cmd->add_option("--events", gc.events, "events per instance");
  gc_cmd->add_option("--tolerance", gc.tolerance, "max relative error");
  gc_cmd->add_option("--corrupt-tensor", gc.corrupt_tensor,
                     "test hook: corrupt one analytic tensor")
      ->group("");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-community corpus");
  int sy_k = 4, sy_s = 10, sy_r = 600;
  std::size_t sy_dr = 32, sy_ds = 16;
  double sy_noise = 0.1;
  std::uint64_t sy_seed = 1;
  std::string sy_out = "synth";
  synth_cmd->add_option("--k", sy_k, "community count");
  synth_cmd->add_option("--s", sy_s, "services per community");
  synth_cmd->add_option("--r", sy_r, "requirement count");
  synth_cmd->add_option("--d-r", sy_dr, "requirement dimension");
  synth_cmd->add_option("--d-s", sy_ds, "service dimension");
  synth_cmd->add_option("--noise", sy_noise, "requirement noise scale");
  synth_cmd->add_option("--seed", sy_seed, "generator seed");
  synth_cmd->add_option("--out-dir", sy_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    Settings settings;
    if (!config_path.empty()) settings.load_file(config_path);
    settings.apply_overrides(overrides);

    if (train_cmd->parsed()) {
      for (const std::string& a : ablations) {
        if (a != "rand_init" && a != "static_z" && a != "no_transform")
          throw std::runtime_error("unknown ablation '" + a + "'");
        settings.set(a, "true");
      }
      if (!train_out.empty()) settings.set("out_dir", train_out);
      if (train_seed >= 0) settings.set("seed", std::to_string(train_seed));
      if (train_seeds >= 0) settings.set("seeds", std::to_string(train_seeds));
      if (train_epochs >= 0) settings.set("epochs", std::to_string(train_epochs));
      return cmd_train(settings);
    }
    if (eval_cmd->parsed()) {
      if (!eval_mode.empty()) settings.set("mode", eval_mode);
      if (!eval_nlist.empty()) settings.set("n_list", eval_nlist);
      if (!eval_out.empty()) settings.set("out_dir", eval_out);
      if (eval_plf1) settings.set("paper_literal_f1", "true");
      return cmd_eval(settings, eval_ckpt, eval_graph, eval_baseline);
    }
    if (rec_cmd->parsed()) return cmd_recommend(rec_ckpt, rec_graph, rec_reqs, rec_n, rec_out);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc);
    if (synth_cmd->parsed())
      return cmd_synth(sy_k, sy_s, sy_r, sy_dr, sy_ds, sy_noise, sy_seed, sy_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
