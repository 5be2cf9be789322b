// kbq: synthesize benchmarks, explore, label positions, train and evaluate
// KB query predictors.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kbq/batch.hpp"
#include "kbq/checkpoint.hpp"
#include "kbq/errors.hpp"
#include "kbq/exploration.hpp"
#include "kbq/metrics.hpp"
#include "kbq/position.hpp"
#include "kbq/synth.hpp"
#include "kbq/training.hpp"

#ifndef KBQ_VERSION
#define KBQ_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kState = 3, kData = 4 };

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(md, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(md, digest, &len);
  EVP_MD_CTX_free(md);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

// Options of one subcommand that may also come from a JSON config file.
// Values given on the command line win over the file.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, target, help);
    entries_.push_back({name, opt, [&target](const json& v) { target = v.get<T>(); },
                        [&target]() { return json(target); }});
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& target, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + name, target, help);
    entries_.push_back({name, opt, [&target](const json& v) { target = v.get<bool>(); },
                        [&target]() { return json(target); }});
    return opt;
  }

  /// Fills options not given on the command line from `doc`, which is either
  /// a flat object or a run manifest with a "config" member.
  void apply(const json& doc, const std::string& subcommand) {
    const json* cfg = &doc;
    if (doc.is_object() && doc.contains("config") && doc.contains("subcommand")) {
      if (doc.at("subcommand") != subcommand) {
        throw kbq::ArgumentError("config file is a manifest of '" + doc.at("subcommand").get<std::string>() +
                                 "', not '" + subcommand + "'");
      }
      cfg = &doc.at("config");
    }
    if (!cfg->is_object()) throw kbq::ArgumentError("config file must hold a JSON object");
    for (const auto& [key, value] : cfg->items()) {
      auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == key; });
      if (it == entries_.end()) throw kbq::ArgumentError("unknown config key '" + key + "'");
      if (it->opt->count() > 0) continue;
      try {
        it->set(value);
      } catch (const json::exception& e) {
        throw kbq::ArgumentError("config key '" + key + "': " + e.what());
      }
    }
  }

  json resolved() const {
    json out = json::object();
    for (const auto& e : entries_) out[e.name] = e.get();
    return out;
  }

 private:
  struct Entry {
    std::string name;
    CLI::Option* opt;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };
  CLI::App* app_;
  std::vector<Entry> entries_;
};

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = kbq::default_jobs();
};

class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> argv)
      : subcommand_(std::move(subcommand)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& role, const std::string& path) {
    if (!path.empty()) inputs_[role] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  void output(const std::string& role, const fs::path& path) {
    outputs_[role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }
  void note(const std::string& key, json value) { notes_[key] = std::move(value); }

  void write(const fs::path& dir, const json& config, std::uint64_t seed) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json doc = {{"subcommand", subcommand_},
                {"version", KBQ_VERSION},
                {"argv", argv_},
                {"seed", seed},
                {"config", config},
                {"inputs", inputs_},
                {"outputs", outputs_},
                {"wall_seconds", secs}};
    if (!notes_.empty()) doc["notes"] = notes_;
    kbq::write_json_file(doc, dir / "run_manifest.json");
  }

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::object();
  json outputs_ = json::object();
  json notes_ = json::object();
};

void add_common(Settings& s, Common& c, CLI::App* app, bool needs_out = true) {
  app->add_option("--config", c.config, "JSON config file; flags override its values");
  auto* out = s.add("out", c.out, "Output directory");
  if (needs_out) out->required(false);
  s.add("seed", c.seed, "Seed for every random choice");
  s.add("jobs", c.jobs, "Parallel workers (default: KBQ_JOBS or 1)");
}

void finish_config(Settings& s, const Common& c, const std::string& name) {
  if (!c.config.empty()) s.apply(kbq::read_json_file(c.config), name);
  if (c.out.empty()) throw kbq::ArgumentError("--out is required");
  if (c.jobs < 1) throw kbq::ArgumentError("--jobs must be positive");
}

std::vector<kbq::Dialog> load_split(const std::string& path, const char* what) {
  if (path.empty()) throw kbq::ArgumentError(std::string("--") + what + " is required");
  return kbq::load_corpus(path);
}

kbq::KnowledgeBase load_kb(const std::string& path) {
  if (path.empty()) throw kbq::ArgumentError("--kb is required");
  return kbq::KnowledgeBase::load(path);
}

// ---- synth

struct SynthArgs {
  Common common;
  double rho = 0.875;
  int rows = 110;
  int dialogs = 406;
  int val_dialogs = -1;
  int test_dialogs = -1;
  double heuristic_match = 0.8;
  double overconstrain = 0.0;
  double second_request = 0.2;
  int max_small_talk = 1;
};

int run_synth(SynthArgs& a, Settings& s, const std::vector<std::string>& argv) {
  finish_config(s, a.common, "synth");
  kbq::BenchConfig c;
  c.rho = a.rho;
  c.n_rows = a.rows;
  c.n_train = a.dialogs;
  c.n_val = a.val_dialogs >= 0 ? a.val_dialogs : (a.dialogs + 1) / 3;
  c.n_test = a.test_dialogs >= 0 ? a.test_dialogs : (a.dialogs + 1) / 3;
  c.heuristic_match = a.heuristic_match;
  c.overconstrain = a.overconstrain;
  c.second_request = a.second_request;
  c.max_small_talk = a.max_small_talk;
  c.seed = a.common.seed;
  Manifest m("synth", argv);
  const auto bench = kbq::generate(c);
  const fs::path dir = a.common.out;
  kbq::save_benchmark(bench, dir);
  for (const char* f : {"kb.json", "train.json", "val.json", "test.json", "manifest.json"}) m.output(f, dir / f);
  m.write(dir, s.resolved(), a.common.seed);
  std::cout << "wrote benchmark to " << dir.string() << " (achieved rho "
            << kbq::format_double(bench.manifest.at("achieved_rho").get<double>()) << ")\n";
  return kOk;
}

// ---- explore

struct ExploreArgs {
  Common common;
  std::string kb, corpus, positions = "gold";
  int max_clauses = kbq::kDefaultMaxClauses;
};

int run_explore(ExploreArgs& a, Settings& s, const std::vector<std::string>& argv) {
  finish_config(s, a.common, "explore");
  if (a.max_clauses < 1 || a.max_clauses > 8) throw kbq::ArgumentError("--max-clauses must lie in [1, 8]");
  const auto mode = kbq::parse_position_mode(a.positions);
  if (mode == kbq::PositionMode::Predicted) throw kbq::ArgumentError("explore supports gold or heuristic positions");
  Manifest m("explore", argv);
  m.input("kb", a.kb);
  m.input("corpus", a.corpus);
  const auto kb = load_kb(a.kb);
  const auto corpus = load_split(a.corpus, "corpus");
  const auto positions = kbq::resolve_positions(corpus, mode, kb);

  json dialogs = json::array();
  std::size_t skipped = 0, seeded = 0;
  double best_sum = 0.0, size_sum = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto es = kbq::subsequent_entities(corpus[i], positions[i], kb);
    if (es.empty()) {
      ++skipped;
      std::cerr << "dialog " << i << ": no entities after turn " << positions[i] << ", skipped\n";
      continue;
    }
    const auto res = kbq::systematic_explore(kbq::make_context(corpus[i], positions[i]), es, kb, a.max_clauses);
    json j = kbq::to_json(res);
    j["dialog"] = i;
    j["position"] = positions[i];
    dialogs.push_back(std::move(j));
    seeded += !res.entries.empty();
    best_sum += res.best_reward;
    size_sum += static_cast<double>(res.entries.size());
  }
  const double explored = static_cast<double>(corpus.size() - skipped);
  json summary = {{"dialogs", corpus.size()},
                  {"skipped", skipped},
                  {"with_positive_query", seeded},
                  {"mean_buffer_seed_size", explored > 0 ? size_sum / explored : 0.0},
                  {"mean_best_reward", explored > 0 ? best_sum / explored : 0.0}};
  const fs::path dir = a.common.out;
  kbq::write_json_file({{"summary", summary}, {"dialogs", dialogs}}, dir / "explore.json");
  m.output("explore", dir / "explore.json");
  m.write(dir, s.resolved(), a.common.seed);
  std::cout << summary.dump() << '\n';
  return kOk;
}

// ---- label-positions

struct LabelArgs {
  Common common;
  std::string kb, corpus;
};

int run_label(LabelArgs& a, Settings& s, const std::vector<std::string>& argv) {
  finish_config(s, a.common, "label-positions");
  Manifest m("label-positions", argv);
  m.input("kb", a.kb);
  m.input("corpus", a.corpus);
  const auto kb = load_kb(a.kb);
  auto corpus = load_split(a.corpus, "corpus");
  std::size_t labelled = 0, agree = 0, with_gold = 0;
  for (auto& d : corpus) {
    d.heuristic_position = kbq::heuristic_position(d, kb);
    labelled += d.heuristic_position.has_value();
    if (d.gold_position) {
      ++with_gold;
      agree += d.heuristic_position == d.gold_position;
    }
  }
  const fs::path dir = a.common.out;
  fs::create_directories(dir);
  const fs::path out = dir / fs::path(a.corpus).filename();
  kbq::save_corpus(corpus, out);
  m.output("corpus", out);
  json summary = {{"dialogs", corpus.size()}, {"labelled", labelled}};
  if (with_gold) summary["agreement_with_gold"] = static_cast<double>(agree) / static_cast<double>(with_gold);
  m.note("summary", summary);
  m.write(dir, s.resolved(), a.common.seed);
  std::cout << summary.dump() << '\n';
  return kOk;
}

// ---- train

struct TrainArgs {
  Common common;
  std::string kb, train, val, test;
  std::string estimator = "mbmapo";
  std::string positions = "gold";
  bool train_position = false;
  kbq::TrainConfig cfg;
  kbq::PositionConfig pos;
};

json position_section(const kbq::PositionModel& model, const std::vector<kbq::Dialog>& corpus,
                      const kbq::KnowledgeBase& kb) {
  for (const auto& d : corpus) {
    if (!d.gold_position) return json();
  }
  return kbq::to_json(kbq::position_metrics(model, corpus, kb));
}

int run_train(TrainArgs& a, Settings& s, const std::vector<std::string>& argv) {
  finish_config(s, a.common, "train");
  a.cfg.estimator = kbq::parse_estimator(a.estimator);
  a.cfg.seed = a.common.seed;
  a.cfg.validate();
  const auto mode = kbq::parse_position_mode(a.positions);
  a.pos.seed = a.common.seed;
  a.pos.validate();
  for (const auto& name : a.cfg.ignored_settings()) {
    std::cerr << "warning: --" << name << " is ignored by estimator " << a.estimator << '\n';
  }

  Manifest m("train", argv);
  m.input("kb", a.kb);
  m.input("train", a.train);
  m.input("val", a.val);
  m.input("test", a.test);
  const auto kb = load_kb(a.kb);
  const auto train_corpus = load_split(a.train, "train");
  std::optional<std::vector<kbq::Dialog>> val, test;
  if (!a.val.empty()) val = kbq::load_corpus(a.val);
  if (!a.test.empty()) test = kbq::load_corpus(a.test);

  const fs::path dir = a.common.out;
  fs::create_directories(dir);

  // Positions: heuristic labels for training under heuristic / predicted,
  // and a classifier trained on them when predictions are needed.
  const auto train_mode = mode == kbq::PositionMode::Gold ? kbq::PositionMode::Gold : kbq::PositionMode::Heuristic;
  std::vector<int> train_pos = kbq::resolve_positions(train_corpus, train_mode, kb);
  std::optional<kbq::PositionModel> position_model;
  auto fit_position = [&] {
    std::vector<std::optional<int>> labels;
    for (const auto& d : train_corpus) {
      labels.push_back(d.heuristic_position ? d.heuristic_position : kbq::heuristic_position(d, kb));
    }
    position_model = kbq::train_position(train_corpus, labels, kb, a.pos);
    if (position_model->degenerate) std::cerr << "warning: every position label is positive\n";
  };
  if (mode == kbq::PositionMode::Predicted) fit_position();
  auto eval_positions = [&](const std::vector<kbq::Dialog>& corpus) {
    return kbq::resolve_positions(corpus, mode, kb, position_model ? &*position_model : nullptr);
  };

  kbq::TrainData td{&train_corpus, train_pos};
  std::optional<kbq::TrainData> vd;
  if (val) vd = kbq::TrainData{&*val, eval_positions(*val)};
  const auto result = kbq::train(td, vd ? &*vd : nullptr, kb, a.cfg, a.common.jobs, &std::cerr);
  if (a.train_position && !position_model) fit_position();

  kbq::save_policy(result.params, dir / "policy.json");
  m.output("policy", dir / "policy.json");
  if (position_model) {
    kbq::save_position(*position_model, dir / "position.json");
    m.output("position", dir / "position.json");
  }
  {
    std::ofstream csv(dir / "metrics.csv");
    kbq::write_metrics_csv(result, csv);
  }
  m.output("metrics", dir / "metrics.csv");

  json report = {{"estimator", a.estimator},
                 {"positions", a.positions},
                 {"training", result.history.empty() ? json() : kbq::history_to_json(result)}};
  auto final_eval = [&](const std::vector<kbq::Dialog>& corpus) {
    json j = kbq::to_json(kbq::summarize(
        kbq::predict_queries(result.params, corpus, eval_positions(corpus), kb, a.common.jobs), corpus));
    if (position_model) {
      json p = position_section(*position_model, corpus, kb);
      if (!p.is_null()) j["position"] = p;
    }
    return j;
  };
  json final_metrics = {{"train", final_eval(train_corpus)}};
  if (val) final_metrics["val"] = final_eval(*val);
  if (test) final_metrics["test"] = final_eval(*test);
  report["final"] = final_metrics;
  const auto dyn = kbq::buffer_dynamics(result);
  if (!dyn.empty()) {
    json d = json::array();
    for (const auto& [bh, bo] : dyn) d.push_back({{"avg_pi_bh", bh}, {"avg_pi_bo", bo}});
    report["buffer_dynamics"] = d;
  }
  kbq::write_json_file(report, dir / "report.json");
  m.output("report", dir / "report.json");
  m.write(dir, s.resolved(), a.common.seed);
  std::cout << final_metrics.dump() << '\n';
  return kOk;
}

// ---- eval

struct EvalArgs {
  Common common;
  std::string kb, corpus, policy, position, positions = "gold", format = "json";
};

int run_eval(EvalArgs& a, Settings& s, const std::vector<std::string>& argv) {
  finish_config(s, a.common, "eval");
  if (a.format != "json" && a.format != "csv") throw kbq::ArgumentError("--format must be json or csv");
  if (a.policy.empty()) throw kbq::ArgumentError("--policy is required");
  const auto mode = kbq::parse_position_mode(a.positions);
  Manifest m("eval", argv);
  m.input("kb", a.kb);
  m.input("corpus", a.corpus);
  m.input("policy", a.policy);
  m.input("position", a.position);
  const auto kb = load_kb(a.kb);
  const auto corpus = load_split(a.corpus, "corpus");
  if (corpus.empty()) throw kbq::ArgumentError("evaluation corpus is empty");
  const auto params = kbq::load_policy(a.policy, kb);
  std::optional<kbq::PositionModel> pm;
  if (!a.position.empty()) pm = kbq::load_position(a.position, kb);
  if (mode == kbq::PositionMode::Predicted && !pm) throw kbq::ArgumentError("--positions predicted needs --position");

  const auto positions = kbq::resolve_positions(corpus, mode, kb, pm ? &*pm : nullptr);
  const auto qm = kbq::summarize(kbq::predict_queries(params, corpus, positions, kb, a.common.jobs), corpus);
  std::optional<kbq::PositionMetrics> posm;
  if (pm && std::all_of(corpus.begin(), corpus.end(), [](const kbq::Dialog& d) { return d.gold_position.has_value(); })) {
    posm = kbq::position_metrics(*pm, corpus, kb);
  }

  const fs::path dir = a.common.out;
  fs::create_directories(dir);
  fs::path out;
  if (a.format == "json") {
    json j = {{"positions", a.positions}, {"query", kbq::to_json(qm)}};
    if (posm) j["position"] = kbq::to_json(*posm);
    out = dir / "report.json";
    kbq::write_json_file(j, out);
  } else {
    out = dir / "report.csv";
    std::ofstream csv(out);
    csv << "epoch,split,metric,value\n";
    auto row = [&](const char* metric, double v) { csv << "0,eval," << metric << ',' << kbq::format_double(v) << '\n'; };
    row("total_reward", qm.total_reward);
    row("mean_reward", qm.mean_reward);
    if (qm.has_gold) {
      row("query_accuracy", qm.query_accuracy);
      row("piq_ratio", qm.piq_ratio);
    }
    if (posm) {
      row("position_accuracy", posm->accuracy);
      row("average_turn_difference", posm->average_turn_difference);
    }
  }
  m.output("report", out);
  m.write(dir, s.resolved(), a.common.seed);
  std::ifstream in(out);
  std::cout << in.rdbuf();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised KB query prediction for task-oriented dialogs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", KBQ_VERSION);
  std::vector<std::string> args(argv, argv + argc);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic KB and dialog corpus");
  Settings synth_s(synth_cmd);
  add_common(synth_s, synth.common, synth_cmd);
  synth.common.seed = 7;
  synth_s.add("rho", synth.rho, "Cuisine / price co-occurrence strength in [0, 1]");
  synth_s.add("rows", synth.rows, "KB rows");
  synth_s.add("dialogs", synth.dialogs, "Training dialogs");
  synth_s.add("val-dialogs", synth.val_dialogs, "Validation dialogs (default: a third of --dialogs)");
  synth_s.add("test-dialogs", synth.test_dialogs, "Test dialogs (default: a third of --dialogs)");
  synth_s.add("heuristic-match", synth.heuristic_match, "Fraction of dialogs revealing the first entity at the query turn");
  synth_s.add("overconstrain", synth.overconstrain, "Fraction of dialogs volunteering a non-intent value");
  synth_s.add("second-request", synth.second_request, "Probability of a second requested field");
  synth_s.add("max-small-talk", synth.max_small_talk, "Maximum small-talk turns");

  ExploreArgs explore;
  auto* explore_cmd = app.add_subcommand("explore", "Enumerate positive-reward queries per dialog");
  Settings explore_s(explore_cmd);
  add_common(explore_s, explore.common, explore_cmd);
  explore_s.add("kb", explore.kb, "KB JSON");
  explore_s.add("corpus", explore.corpus, "Corpus JSON");
  explore_s.add("positions", explore.positions, "gold | heuristic");
  explore_s.add("max-clauses", explore.max_clauses, "Maximum clauses per query");

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label-positions", "Write heuristic query positions into a corpus copy");
  Settings label_s(label_cmd);
  add_common(label_s, label.common, label_cmd);
  label_s.add("kb", label.kb, "KB JSON");
  label_s.add("corpus", label.corpus, "Corpus JSON");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the query predictor (and optionally the position classifier)");
  Settings train_s(train_cmd);
  add_common(train_s, tr.common, train_cmd);
  train_s.add("kb", tr.kb, "KB JSON");
  train_s.add("train", tr.train, "Training corpus JSON");
  train_s.add("val", tr.val, "Validation corpus JSON (early stopping)");
  train_s.add("test", tr.test, "Test corpus JSON (final report only)");
  train_s.add("estimator", tr.estimator, "reinforce | bs | rbs | mapo | mbmapo | sl | slrl");
  train_s.add("positions", tr.positions, "gold | heuristic | predicted");
  train_s.flag("train-position", tr.train_position, "Also fit the position classifier");
  train_s.add("alpha", tr.cfg.alpha, "MAPO buffer clipping floor");
  train_s.add("alpha-h", tr.cfg.alpha_h, "mB-MAPO floor for the best-reward buffer");
  train_s.add("alpha-o", tr.cfg.alpha_o, "mB-MAPO floor fraction for the other buffer");
  train_s.add("eps", tr.cfg.epsilon, "Randomized beam search epsilon");
  train_s.add("lambda", tr.cfg.lambda, "Weight of the RL term in SL+RL");
  train_s.add("samples", tr.cfg.num_samples, "On-policy samples per context and step");
  train_s.add("beam-width", tr.cfg.beam_width, "Beam width for bs / rbs");
  train_s.add("lr", tr.cfg.learning_rate, "Learning rate");
  train_s.add("batch-size", tr.cfg.batch_size, "Contexts per parameter update");
  train_s.add("epochs", tr.cfg.max_epochs, "Maximum epochs");
  train_s.add("patience", tr.cfg.patience, "Epochs without validation improvement before stopping");
  train_s.add("max-clauses", tr.cfg.max_clauses, "Maximum clauses per query");
  train_s.add("hash-bits", tr.cfg.hash_bits, "log2 of the policy feature space");
  train_s.add("min-buffer-clauses", tr.cfg.min_buffer_clauses, "Smallest clause count admitted to replay buffers");
  train_s.add("position-epochs", tr.pos.epochs, "Position classifier epochs");
  train_s.add("position-lr", tr.pos.learning_rate, "Position classifier learning rate");
  train_s.add("tau", tr.pos.tau, "Position decision threshold");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained policy");
  Settings eval_s(eval_cmd);
  add_common(eval_s, ev.common, eval_cmd);
  eval_s.add("kb", ev.kb, "KB JSON");
  eval_s.add("corpus", ev.corpus, "Evaluation corpus JSON");
  eval_s.add("policy", ev.policy, "Policy checkpoint");
  eval_s.add("position", ev.position, "Position classifier checkpoint");
  eval_s.add("positions", ev.positions, "gold | heuristic | predicted");
  eval_s.add("format", ev.format, "json | csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth, synth_s, args);
    if (*explore_cmd) return run_explore(explore, explore_s, args);
    if (*label_cmd) return run_label(label, label_s, args);
    if (*train_cmd) return run_train(tr, train_s, args);
    if (*eval_cmd) return run_eval(ev, eval_s, args);
  } catch (const kbq::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const kbq::CompatibilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kState;
  } catch (const kbq::StateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kState;
  } catch (const kbq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
