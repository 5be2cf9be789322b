#include "kbq/training.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>

#include "kbq/batch.hpp"
#include "kbq/errors.hpp"
#include "kbq/estimators.hpp"
#include "kbq/exploration.hpp"
#include "kbq/rng.hpp"

namespace kbq {

namespace {

struct NamedEstimator {
  const char* name;
  EstimatorKind kind;
};
constexpr NamedEstimator kEstimators[] = {
    {"reinforce", EstimatorKind::Reinforce}, {"bs", EstimatorKind::BeamSearch},
    {"rbs", EstimatorKind::RandomizedBeam},  {"mapo", EstimatorKind::Mapo},
    {"mbmapo", EstimatorKind::MbMapo},       {"sl", EstimatorKind::Supervised},
    {"slrl", EstimatorKind::SupervisedRl},
};

bool supervised(EstimatorKind k) { return k == EstimatorKind::Supervised || k == EstimatorKind::SupervisedRl; }
bool uses_pair(EstimatorKind k) { return k == EstimatorKind::MbMapo || k == EstimatorKind::SupervisedRl; }

// Everything about one training context that survives across epochs.
struct ContextState {
  std::size_t dialog = 0;
  std::unique_ptr<EncodedContext> ctx;
  std::unique_ptr<QueryRewarder> rewarder;  // null when E^s is empty
  std::optional<Query> gold;
  QueryBuffer buffer;
  BufferPair pair;
};

}  // namespace

EstimatorKind parse_estimator(const std::string& name) {
  for (const auto& e : kEstimators) {
    if (name == e.name) return e.kind;
  }
  throw ArgumentError("unknown estimator '" + name + "' (reinforce|bs|rbs|mapo|mbmapo|sl|slrl)");
}

std::string estimator_name(EstimatorKind kind) {
  for (const auto& e : kEstimators) {
    if (kind == e.kind) return e.name;
  }
  return "?";
}

PositionMode parse_position_mode(const std::string& name) {
  if (name == "gold") return PositionMode::Gold;
  if (name == "heuristic") return PositionMode::Heuristic;
  if (name == "predicted") return PositionMode::Predicted;
  throw ArgumentError("unknown position mode '" + name + "' (gold|heuristic|predicted)");
}

std::string position_mode_name(PositionMode mode) {
  switch (mode) {
    case PositionMode::Gold: return "gold";
    case PositionMode::Heuristic: return "heuristic";
    case PositionMode::Predicted: return "predicted";
  }
  return "?";
}

void TrainConfig::validate() const {
  auto unit = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string(what) + " must lie in [0, 1]");
  };
  unit(alpha, "alpha");
  unit(alpha_h, "alpha_h");
  unit(alpha_o, "alpha_o");
  unit(epsilon, "epsilon");
  if (!(lambda >= 0.0)) throw ArgumentError("lambda must be non-negative");
  if (num_samples < 1) throw ArgumentError("num_samples must be positive");
  if (beam_width < 1) throw ArgumentError("beam_width must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning_rate must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
  if (max_epochs < 1) throw ArgumentError("max_epochs must be positive");
  if (patience < 1) throw ArgumentError("patience must be positive");
  if (max_clauses < 1 || max_clauses > 8) throw ArgumentError("max_clauses must lie in [1, 8]");
  if (hash_bits < 4 || hash_bits > 30) throw ArgumentError("hash_bits must lie in [4, 30]");
  if (min_buffer_clauses < 0 || min_buffer_clauses > max_clauses) {
    throw ArgumentError("min_buffer_clauses must lie in [0, max_clauses]");
  }
}

std::vector<std::string> TrainConfig::ignored_settings() const {
  const TrainConfig d;
  std::vector<std::string> out;
  const auto k = estimator;
  if (k != EstimatorKind::Mapo && alpha != d.alpha) out.push_back("alpha");
  if (!uses_pair(k) && alpha_h != d.alpha_h) out.push_back("alpha_h");
  if (!uses_pair(k) && alpha_o != d.alpha_o) out.push_back("alpha_o");
  if (k != EstimatorKind::SupervisedRl && lambda != d.lambda) out.push_back("lambda");
  if (k != EstimatorKind::RandomizedBeam && epsilon != d.epsilon) out.push_back("epsilon");
  if ((k == EstimatorKind::BeamSearch || k == EstimatorKind::RandomizedBeam || k == EstimatorKind::Supervised) &&
      num_samples != d.num_samples) {
    out.push_back("num_samples");
  }
  if (k != EstimatorKind::BeamSearch && k != EstimatorKind::RandomizedBeam && beam_width != d.beam_width) {
    out.push_back("beam_width");
  }
  if (k != EstimatorKind::Mapo && !uses_pair(k) && min_buffer_clauses != d.min_buffer_clauses) {
    out.push_back("min_buffer_clauses");
  }
  return out;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"estimator", estimator_name(estimator)},
          {"alpha", alpha},
          {"alpha_h", alpha_h},
          {"alpha_o", alpha_o},
          {"lambda", lambda},
          {"epsilon", epsilon},
          {"num_samples", num_samples},
          {"beam_width", beam_width},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"seed", seed},
          {"max_clauses", max_clauses},
          {"hash_bits", hash_bits},
          {"min_buffer_clauses", min_buffer_clauses}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw ArgumentError("training config must be a JSON object");
  try {
    if (j.contains("estimator")) c.estimator = parse_estimator(j.at("estimator").get<std::string>());
    c.alpha = j.value("alpha", c.alpha);
    c.alpha_h = j.value("alpha_h", c.alpha_h);
    c.alpha_o = j.value("alpha_o", c.alpha_o);
    c.lambda = j.value("lambda", c.lambda);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.num_samples = j.value("num_samples", c.num_samples);
    c.beam_width = j.value("beam_width", c.beam_width);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.max_clauses = j.value("max_clauses", c.max_clauses);
    c.hash_bits = j.value("hash_bits", c.hash_bits);
    c.min_buffer_clauses = j.value("min_buffer_clauses", c.min_buffer_clauses);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad training config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

std::vector<int> resolve_positions(const std::vector<Dialog>& corpus, PositionMode mode, const KnowledgeBase& kb,
                                   const PositionModel* model) {
  switch (mode) {
    case PositionMode::Gold: return gold_positions(corpus);
    case PositionMode::Heuristic: {
      std::vector<int> out;
      for (const auto& d : corpus) {
        if (d.heuristic_position) {
          out.push_back(*d.heuristic_position);
        } else {
          out.push_back(heuristic_position(d, kb).value_or(d.num_turns()));
        }
      }
      return out;
    }
    case PositionMode::Predicted: {
      if (model == nullptr) throw ArgumentError("predicted positions need a position model");
      std::vector<int> out;
      for (const auto& d : corpus) out.push_back(predict_position(*model, d, kb));
      return out;
    }
  }
  return {};
}

TrainResult train(const TrainData& train_data, const TrainData* val, const KnowledgeBase& kb,
                  const TrainConfig& config, int jobs, std::ostream* log) {
  config.validate();
  if (train_data.corpus == nullptr || train_data.corpus->empty()) throw ArgumentError("training corpus is empty");
  const auto& corpus = *train_data.corpus;
  if (train_data.positions.size() != corpus.size()) throw ArgumentError("one training position per dialog is required");
  if (val && (val->corpus == nullptr || val->positions.size() != val->corpus->size())) {
    throw ArgumentError("one validation position per dialog is required");
  }
  const EstimatorKind kind = config.estimator;
  if (supervised(kind)) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!corpus[i].gold_query) {
        throw ArgumentError("supervised training needs gold queries; dialog " + std::to_string(i) + " has none");
      }
    }
  }

  const PolicyConfig pc = config.policy_config();
  TrainResult result;
  result.estimator = kind;
  result.params = PolicyParameters::zeros(kb, pc);
  PolicyParameters& params = result.params;

  // Per-context preprocessing, including the systematic exploration that
  // seeds the buffers.
  std::vector<ContextState> all(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    ContextState& s = all[i];
    s.dialog = i;
    const Dialog& d = corpus[i];
    const int q = train_data.positions[i];
    const DialogContext dc = make_context(d, q);
    s.ctx = std::make_unique<EncodedContext>(dc, kb, pc);
    const EntitySet es = subsequent_entities(d, q, kb);
    if (!es.empty()) {
      s.rewarder = std::make_unique<QueryRewarder>(kb, es);
      if (kind == EstimatorKind::Mapo || uses_pair(kind)) {
        ExplorationResult ex = systematic_explore(dc, es, kb, pc.max_clauses);
        std::erase_if(ex.entries, [&](const ScoredQuery& e) {
          return static_cast<int>(e.query.clauses.size()) < config.min_buffer_clauses;
        });
        if (kind == EstimatorKind::Mapo) {
          s.buffer = seed_buffer(ex);
        } else {
          s.pair = seed_buffer_pair(ex);
        }
      }
    }
    if (supervised(kind) && !query_orderings(canonicalize(*d.gold_query), *s.ctx).empty()) s.gold = *d.gold_query;
  });
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& s = all[i];
    const bool ok = supervised(kind) ? s.gold.has_value() : s.rewarder != nullptr;
    if (ok) active.push_back(i);
  }
  result.skipped = corpus.size() - active.size();
  if (active.empty()) throw ArgumentError("no trainable context in the corpus");

  // Sign of the update: RL estimators give ascent directions, SL losses descent.
  const double sign = supervised(kind) ? -1.0 : 1.0;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  double best_val = -std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  PolicyParameters best = params;
  std::vector<GradientEstimate> slots(batch);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<std::size_t> order = active;
    Rng shuffle_rng = Rng::substream(config.seed, {0, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    EpochRecord rec;
    rec.epoch = epoch;
    double sum_bh = 0, sum_bo = 0, sum_cbh = 0, sum_cbo = 0, sum_size = 0;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      parallel_for(n, jobs, [&](std::size_t j) {
        ContextState& s = all[order[start + j]];
        Rng rng = Rng::substream(config.seed, {1, static_cast<std::uint64_t>(epoch), s.dialog});
        const EncodedContext& ctx = *s.ctx;
        GradientEstimate& est = slots[j];
        switch (kind) {
          case EstimatorKind::Reinforce:
            est = reinforce_gradient(params, ctx, *s.rewarder, config.num_samples, rng);
            break;
          case EstimatorKind::BeamSearch:
            est = bs_reinforce_gradient(params, ctx, *s.rewarder, config.beam_width);
            break;
          case EstimatorKind::RandomizedBeam:
            est = rbs_reinforce_gradient(params, ctx, *s.rewarder, config.beam_width, config.epsilon, rng);
            break;
          case EstimatorKind::Mapo:
            est = mapo_gradient(params, ctx, *s.rewarder, s.buffer, config.alpha, config.num_samples, rng);
            break;
          case EstimatorKind::MbMapo:
            est = mbmapo_gradient(params, ctx, *s.rewarder, s.pair, config.alpha_h, config.alpha_o,
                                  config.num_samples, rng);
            break;
          case EstimatorKind::Supervised:
            est = GradientEstimate{sl_loss_gradient(params, ctx, *s.gold), {}, {}};
            break;
          case EstimatorKind::SupervisedRl:
            if (s.rewarder) {
              est = sl_rl_gradient(params, ctx, *s.gold, *s.rewarder, s.pair, config.alpha_h, config.alpha_o,
                                   config.lambda, config.num_samples, rng);
            } else {
              est = GradientEstimate{sl_loss_gradient(params, ctx, *s.gold), {}, {}};
            }
            break;
        }
      });

      // Single-writer phase: parameters, then buffers in batch order.
      std::vector<std::vector<double>> grads(n);
      for (std::size_t j = 0; j < n; ++j) grads[j] = std::move(slots[j].gradient);
      reduce_into(grads, sign * config.learning_rate / static_cast<double>(n), params.weights);
      for (std::size_t j = 0; j < n; ++j) {
        ContextState& s = all[order[start + j]];
        const auto& dg = slots[j].diagnostics;
        sum_bh += dg.pi_bh;
        sum_bo += dg.pi_bo;
        sum_cbh += dg.pi_c_bh;
        sum_cbo += dg.pi_c_bo;
        rec.shortfall += dg.shortfall;
        for (const auto& found : slots[j].discoveries) {
          if (static_cast<int>(found.query.clauses.size()) < config.min_buffer_clauses) continue;
          if (kind == EstimatorKind::Mapo) {
            rec.new_buffer_entries += s.buffer.insert(found.query, found.reward);
          } else if (uses_pair(kind) && !s.pair.contains(found.query)) {
            update_buffers(s.pair, found.query, found.reward);
            ++rec.new_buffer_entries;
          }
        }
        sum_size += kind == EstimatorKind::Mapo ? static_cast<double>(s.buffer.size())
                                                : static_cast<double>(s.pair.high.size() + s.pair.other.size());
      }
    }
    const auto visited = static_cast<double>(order.size());
    rec.avg_pi_bh = sum_bh / visited;
    rec.avg_pi_bo = sum_bo / visited;
    rec.avg_pi_c_bh = sum_cbh / visited;
    rec.avg_pi_c_bo = sum_cbo / visited;
    rec.avg_buffer_size = sum_size / visited;

    rec.train = summarize(predict_queries(params, corpus, train_data.positions, kb, jobs), corpus);
    double score = static_cast<double>(epoch);  // without validation the latest epoch wins
    if (val) {
      rec.val = summarize(predict_queries(params, *val->corpus, val->positions, kb, jobs), *val->corpus);
      score = rec.val->total_reward;
    }
    if (log) {
      *log << "epoch " << epoch << " train_reward " << format_double(rec.train.total_reward);
      if (rec.train.has_gold) *log << " train_acc " << format_double(rec.train.query_accuracy);
      if (rec.val) {
        *log << " val_reward " << format_double(rec.val->total_reward);
        if (rec.val->has_gold) *log << " val_acc " << format_double(rec.val->query_accuracy);
      }
      *log << '\n';
    }
    result.history.push_back(rec);

    if (score > best_val) {
      best_val = score;
      best = params;
      result.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= config.patience) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  result.params = std::move(best);
  return result;
}

std::vector<std::pair<double, double>> buffer_dynamics(const TrainResult& result) {
  std::vector<std::pair<double, double>> out;
  if (result.estimator != EstimatorKind::MbMapo) return out;
  for (const auto& r : result.history) out.emplace_back(r.avg_pi_bh, r.avg_pi_bo);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

namespace {

void query_rows(std::ostream& out, int epoch, const char* split, const QueryMetrics& m) {
  auto row = [&](const char* metric, double v) {
    out << epoch << ',' << split << ',' << metric << ',' << format_double(v) << '\n';
  };
  row("total_reward", m.total_reward);
  row("mean_reward", m.mean_reward);
  if (m.has_gold) {
    row("query_accuracy", m.query_accuracy);
    row("piq_ratio", m.piq_ratio);
  }
}

nlohmann::json epoch_json(const EpochRecord& r) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"train", to_json(r.train)},
                      {"avg_pi_bh", r.avg_pi_bh},
                      {"avg_pi_bo", r.avg_pi_bo},
                      {"avg_pi_c_bh", r.avg_pi_c_bh},
                      {"avg_pi_c_bo", r.avg_pi_c_bo},
                      {"avg_buffer_size", r.avg_buffer_size},
                      {"shortfall", r.shortfall},
                      {"new_buffer_entries", r.new_buffer_entries}};
  if (r.val) j["val"] = to_json(*r.val);
  return j;
}

}  // namespace

void write_metrics_csv(const TrainResult& result, std::ostream& out) {
  out << "epoch,split,metric,value\n";
  const bool buffers = result.estimator == EstimatorKind::Mapo || uses_pair(result.estimator);
  for (const auto& r : result.history) {
    query_rows(out, r.epoch, "train", r.train);
    if (buffers) {
      auto row = [&](const char* metric, double v) {
        out << r.epoch << ",train," << metric << ',' << format_double(v) << '\n';
      };
      row("avg_pi_bh", r.avg_pi_bh);
      if (uses_pair(result.estimator)) row("avg_pi_bo", r.avg_pi_bo);
      row("avg_pi_c_bh", r.avg_pi_c_bh);
      if (uses_pair(result.estimator)) row("avg_pi_c_bo", r.avg_pi_c_bo);
      row("avg_buffer_size", r.avg_buffer_size);
      row("shortfall", static_cast<double>(r.shortfall));
    }
    if (r.val) query_rows(out, r.epoch, "val", *r.val);
  }
}

nlohmann::json history_to_json(const TrainResult& result) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& r : result.history) epochs.push_back(epoch_json(r));
  return {{"estimator", estimator_name(result.estimator)},
          {"best_epoch", result.best_epoch},
          {"stopped_early", result.stopped_early},
          {"skipped_contexts", result.skipped},
          {"epochs", epochs}};
}

}  // namespace kbq
