#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "kbq/dialog.hpp"
#include "kbq/kb.hpp"

namespace kbq {

struct ScoredQuery {
  Query query;  // canonical
  double reward = 0.0;

  bool operator==(const ScoredQuery&) const = default;
};

struct ExplorationResult {
  /// Positive-reward canonical queries, ordered by serialized text.
  std::vector<ScoredQuery> entries;
  double best_reward = 0.0;
};

inline constexpr int kDefaultMaxClauses = 4;

/// (field, value) pairs whose value is a KB cell of that field and is
/// mentioned somewhere in the context. Sorted.
std::vector<Clause> candidate_clauses(const DialogContext& context, const KnowledgeBase& kb);

/// Every query built from at most `max_clauses` candidate clauses (one per
/// field) that earns a positive reward.
ExplorationResult systematic_explore(const DialogContext& context, const EntitySet& es,
                                     const KnowledgeBase& kb, int max_clauses = kDefaultMaxClauses);

nlohmann::json to_json(const ExplorationResult& result);

}  // namespace kbq
