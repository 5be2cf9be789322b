#include "kbq/metrics.hpp"

#include <algorithm>

#include "kbq/batch.hpp"
#include "kbq/errors.hpp"
#include "kbq/features.hpp"
#include "kbq/reward.hpp"

namespace kbq {

namespace {

QueryPrediction predict_one(const PolicyParameters& params, const Dialog& d, int q, const KnowledgeBase& kb) {
  QueryPrediction p;
  p.position = q;
  const EncodedContext ctx(make_context(d, q), kb, params.config);
  p.predicted = greedy_query(params, ctx);
  const EntitySet es = subsequent_entities(d, q, kb);
  p.has_entities = !es.empty();
  if (p.has_entities) p.reward = reward(p.predicted, es, kb);
  return p;
}

void check_sizes(const std::vector<Dialog>& corpus, const std::vector<int>& positions) {
  if (positions.size() != corpus.size()) throw ArgumentError("one evaluation position per dialog is required");
}

}  // namespace

std::vector<QueryPrediction> predict_queries(const PolicyParameters& params, const std::vector<Dialog>& corpus,
                                             const std::vector<int>& positions, const KnowledgeBase& kb, int jobs) {
  check_sizes(corpus, positions);
  return parallel_map<QueryPrediction>(corpus.size(), jobs,
                                       [&](std::size_t i) { return predict_one(params, corpus[i], positions[i], kb); });
}

std::vector<QueryPrediction> predict_queries_serial(const PolicyParameters& params, const std::vector<Dialog>& corpus,
                                                    const std::vector<int>& positions, const KnowledgeBase& kb) {
  check_sizes(corpus, positions);
  return serial_map<QueryPrediction>(corpus.size(),
                                     [&](std::size_t i) { return predict_one(params, corpus[i], positions[i], kb); });
}

bool is_partial(const Query& predicted, const Query& gold) {
  const Query p = canonicalize(predicted);
  const Query g = canonicalize(gold);
  if (p.clauses.empty() || p.clauses.size() >= g.clauses.size()) return false;
  return std::includes(g.clauses.begin(), g.clauses.end(), p.clauses.begin(), p.clauses.end());
}

QueryMetrics summarize(const std::vector<QueryPrediction>& predictions, const std::vector<Dialog>& corpus) {
  if (corpus.empty()) throw ArgumentError("evaluation corpus is empty");
  if (predictions.size() != corpus.size()) throw ArgumentError("one prediction per dialog is required");
  QueryMetrics m;
  m.dialogs = corpus.size();
  m.has_gold = std::all_of(corpus.begin(), corpus.end(), [](const Dialog& d) { return d.gold_query.has_value(); });
  std::size_t correct = 0, partial = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& p = predictions[i];
    if (p.has_entities) {
      ++m.rewarded_dialogs;
      m.total_reward += p.reward;
    }
    if (!m.has_gold) continue;
    const Query gold = canonicalize(*corpus[i].gold_query);
    if (p.predicted == gold) {
      ++correct;
    } else if (is_partial(p.predicted, gold)) {
      ++partial;
    }
  }
  const auto n = static_cast<double>(m.dialogs);
  if (m.has_gold) {
    m.query_accuracy = static_cast<double>(correct) / n;
    m.piq_ratio = static_cast<double>(partial) / n;
  }
  m.mean_reward = m.rewarded_dialogs ? m.total_reward / static_cast<double>(m.rewarded_dialogs) : 0.0;
  return m;
}

std::vector<int> gold_positions(const std::vector<Dialog>& corpus) {
  std::vector<int> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].gold_position) throw ArgumentError("dialog " + std::to_string(i) + " lacks a gold position");
    out.push_back(*corpus[i].gold_position);
  }
  return out;
}

namespace {

QueryMetrics gold_metrics(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb,
                          bool need_gold_query) {
  if (corpus.empty()) throw ArgumentError("evaluation corpus is empty");
  if (need_gold_query) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!corpus[i].gold_query) throw ArgumentError("dialog " + std::to_string(i) + " lacks a gold query");
    }
  }
  return summarize(predict_queries(params, corpus, gold_positions(corpus), kb, 1), corpus);
}

}  // namespace

double query_accuracy(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb) {
  return gold_metrics(params, corpus, kb, true).query_accuracy;
}

double piq_ratio(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb) {
  return gold_metrics(params, corpus, kb, true).piq_ratio;
}

double total_reward(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb) {
  return gold_metrics(params, corpus, kb, false).total_reward;
}

nlohmann::json to_json(const QueryMetrics& m) {
  nlohmann::json j = {{"total_reward", m.total_reward},
                      {"mean_reward", m.mean_reward},
                      {"dialogs", m.dialogs},
                      {"rewarded_dialogs", m.rewarded_dialogs}};
  if (m.has_gold) {
    j["query_accuracy"] = m.query_accuracy;
    j["piq_ratio"] = m.piq_ratio;
  }
  return j;
}

}  // namespace kbq
