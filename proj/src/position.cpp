#include "kbq/position.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kbq/errors.hpp"
#include "kbq/exploration.hpp"
#include "kbq/features.hpp"
#include "kbq/rng.hpp"

namespace kbq {

namespace {

enum Tag : std::uint64_t {
  kBias = 0x101,
  kTurn,
  kTurnOneHot,
  kFieldCount,
  kFieldPresent,
  kNewClause,
  kConstrained,
  kConstrainedOneHot,
  kUserWord,
  kLatestUserWord,
  kLatestSystemWord,
};

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& w, const SparseFeatures& x) {
  double s = 0.0;
  for (const auto& [i, v] : x) s += w[i] * v;
  return s;
}

}  // namespace

void PositionConfig::validate() const {
  if (hash_bits < 4 || hash_bits > 24) throw ArgumentError("position hash_bits must lie in [4, 24]");
  if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("tau must lie in (0, 1)");
  if (epochs < 1) throw ArgumentError("position epochs must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("position learning rate must be positive");
  if (l2 < 0.0) throw ArgumentError("position l2 must be non-negative");
}

SparseFeatures position_features(const Dialog& dialog, int t, const KnowledgeBase& kb, int hash_bits) {
  if (t < 1 || t > dialog.num_turns()) throw ArgumentError("turn outside the dialog");
  const int shift = 64 - hash_bits;
  SparseFeatures x;
  auto add = [&](std::uint64_t h, double v) { x.emplace_back(static_cast<std::uint32_t>(h >> shift), v); };
  auto key = [](Tag tag, std::uint64_t v) { return hash_mix(tag, v); };

  add(key(kBias, 0), 1.0);
  add(key(kTurn, 0), static_cast<double>(t) / 10.0);
  add(key(kTurnOneHot, static_cast<std::uint64_t>(std::min(t, 8))), 1.0);

  std::vector<int> per_field(kb.num_fields(), 0);
  std::set<std::string> user_words;
  for (int i = 0; i < t; ++i) {
    const auto& user = dialog.turns[static_cast<std::size_t>(i)].user;
    user_words.insert(user.begin(), user.end());
    for (const auto& e : link_entities(user, kb)) {
      const FieldMask m = kb.fields_of_value(e);
      for (std::size_t f = 0; f < kb.num_fields(); ++f) per_field[f] += (m >> f) & 1;
    }
  }
  for (std::size_t f = 0; f < kb.num_fields(); ++f) {
    if (per_field[f] == 0) continue;
    const std::uint64_t fk = hash_token(kb.fields()[f]);
    add(key(kFieldCount, fk), static_cast<double>(per_field[f]));
    add(key(kFieldPresent, fk), 1.0);
  }

  const auto now = candidate_clauses(make_context(dialog, t), kb);
  std::set<std::string> fields;
  for (const auto& c : now) fields.insert(c.field);
  bool fresh = false;
  if (t == 1) {
    fresh = !now.empty();
  } else {
    const auto before = candidate_clauses(make_context(dialog, t - 1), kb);
    fresh = now.size() > before.size();
  }
  if (fresh) add(key(kNewClause, 0), 1.0);
  add(key(kConstrained, 0), static_cast<double>(fields.size()));
  add(key(kConstrainedOneHot, std::min<std::uint64_t>(fields.size(), 5)), 1.0);

  for (const auto& w : user_words) add(key(kUserWord, hash_token(w)), 1.0);
  std::set<std::string> latest(dialog.turns[static_cast<std::size_t>(t - 1)].user.begin(),
                               dialog.turns[static_cast<std::size_t>(t - 1)].user.end());
  for (const auto& w : latest) add(key(kLatestUserWord, hash_token(w)), 1.0);
  if (t > 1) {
    const auto& sys = dialog.turns[static_cast<std::size_t>(t - 2)].system;
    std::set<std::string> prev(sys.begin(), sys.end());
    for (const auto& w : prev) add(key(kLatestSystemWord, hash_token(w)), 1.0);
  }
  return x;
}

std::uint64_t position_template_hash(const KnowledgeBase& kb, int hash_bits) {
  std::uint64_t h = hash_token(kPositionFeatureVersion);
  h = hash_mix(h, static_cast<std::uint64_t>(hash_bits));
  for (const auto& f : kb.fields()) h = hash_mix(h, hash_token(f));
  return h;
}

PositionModel train_position(const std::vector<Dialog>& corpus, const std::vector<std::optional<int>>& labels,
                             const KnowledgeBase& kb, const PositionConfig& config) {
  config.validate();
  if (labels.size() != corpus.size()) throw ArgumentError("one label slot per dialog is required");
  struct Example {
    SparseFeatures x;
    double y;
  };
  std::vector<Example> data;
  std::size_t labelled = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!labels[i]) continue;
    const int q = *labels[i];
    if (q < 1 || q > corpus[i].num_turns()) throw ArgumentError("position label outside dialog " + std::to_string(i));
    ++labelled;
    for (int t = 1; t <= q; ++t) {
      data.push_back({position_features(corpus[i], t, kb, config.hash_bits), t == q ? 1.0 : 0.0});
    }
  }
  if (labelled == 0) throw ArgumentError("no dialog carries a position label");

  PositionModel m;
  m.hash_bits = config.hash_bits;
  m.tau = config.tau;
  m.template_hash = position_template_hash(kb, config.hash_bits);
  m.weights.assign(std::size_t{1} << config.hash_bits, 0.0);
  m.degenerate = std::all_of(data.begin(), data.end(), [](const Example& e) { return e.y == 1.0; });

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng = Rng::substream(config.seed, {static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const double lr = config.learning_rate / (1.0 + 0.1 * epoch);
    for (std::size_t k : order) {
      const auto& e = data[k];
      const double g = sigmoid(dot(m.weights, e.x)) - e.y;
      for (const auto& [i, v] : e.x) m.weights[i] -= lr * (g * v + config.l2 * m.weights[i]);
    }
  }
  return m;
}

std::vector<double> turn_probabilities(const PositionModel& model, const Dialog& dialog, const KnowledgeBase& kb) {
  if (model.weights.size() != (std::size_t{1} << model.hash_bits)) throw StateError("position model is malformed");
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(dialog.num_turns()));
  for (int t = 1; t <= dialog.num_turns(); ++t) {
    p.push_back(sigmoid(dot(model.weights, position_features(dialog, t, kb, model.hash_bits))));
  }
  return p;
}

std::optional<int> first_crossing(const std::vector<double>& probs, double tau) {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] >= tau) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

int predict_position(const PositionModel& model, const Dialog& dialog, const KnowledgeBase& kb) {
  return first_crossing(turn_probabilities(model, dialog, kb), model.tau).value_or(dialog.num_turns());
}

PositionMetrics position_metrics(const PositionModel& model, const std::vector<Dialog>& corpus,
                                 const KnowledgeBase& kb) {
  if (corpus.empty()) throw ArgumentError("position metrics need a non-empty corpus");
  PositionMetrics m;
  m.dialogs = corpus.size();
  double strict = 0, lenient = 0, diff = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Dialog& d = corpus[i];
    if (!d.gold_position) throw ArgumentError("dialog " + std::to_string(i) + " lacks a gold position");
    const auto probs = turn_probabilities(model, d, kb);
    const auto cross = first_crossing(probs, model.tau);
    const int predicted = cross.value_or(d.num_turns());
    strict += cross == d.gold_position;
    lenient += predicted == *d.gold_position;
    diff += std::abs(predicted - *d.gold_position);
  }
  const auto n = static_cast<double>(corpus.size());
  m.accuracy = strict / n;
  m.lenient_accuracy = lenient / n;
  m.average_turn_difference = diff / n;
  return m;
}

nlohmann::json to_json(const PositionMetrics& m) {
  return {{"accuracy", m.accuracy},
          {"lenient_accuracy", m.lenient_accuracy},
          {"average_turn_difference", m.average_turn_difference},
          {"dialogs", m.dialogs}};
}

}  // namespace kbq
