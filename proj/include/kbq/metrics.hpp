#pragma once

// Query-level evaluation with greedy decoding.

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "kbq/dialog.hpp"
#include "kbq/kb.hpp"
#include "kbq/policy.hpp"

namespace kbq {

struct QueryPrediction {
  Query predicted;  // canonical
  int position = 0;
  bool has_entities = false;  // E^s non-empty at the position
  double reward = 0.0;
};

/// Greedy decode of every dialog at positions[i] (1-based).
std::vector<QueryPrediction> predict_queries(const PolicyParameters& params, const std::vector<Dialog>& corpus,
                                             const std::vector<int>& positions, const KnowledgeBase& kb, int jobs = 1);
std::vector<QueryPrediction> predict_queries_serial(const PolicyParameters& params, const std::vector<Dialog>& corpus,
                                                    const std::vector<int>& positions, const KnowledgeBase& kb);

/// Clauses of `predicted` form a proper nonempty subset of the gold clauses.
bool is_partial(const Query& predicted, const Query& gold);

struct QueryMetrics {
  double query_accuracy = 0.0;
  double piq_ratio = 0.0;
  double total_reward = 0.0;
  double mean_reward = 0.0;
  std::size_t dialogs = 0;
  std::size_t rewarded_dialogs = 0;  // dialogs with non-empty E^s
  bool has_gold = false;
};

/// Accuracy and PIQ need gold queries on every dialog; without them only the
/// reward metrics are filled. Throws ArgumentError on an empty corpus.
QueryMetrics summarize(const std::vector<QueryPrediction>& predictions, const std::vector<Dialog>& corpus);

/// Gold positions. Throw ArgumentError on an empty corpus or missing gold.
double query_accuracy(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb);
double piq_ratio(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb);
double total_reward(const PolicyParameters& params, const std::vector<Dialog>& corpus, const KnowledgeBase& kb);

/// Gold position of every dialog; ArgumentError if one is missing.
std::vector<int> gold_positions(const std::vector<Dialog>& corpus);

nlohmann::json to_json(const QueryMetrics& m);

}  // namespace kbq
