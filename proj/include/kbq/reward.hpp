#pragma once

// Weak-supervision reward: a query earns precision(E^s, E^a) if it retrieves
// every entity mentioned after the query turn, and nothing otherwise.

#include <span>
#include <vector>

#include "kbq/kb.hpp"

namespace kbq {

/// |es ∩ ea| / |es|. Throws ArgumentError on empty es.
double recall(const EntitySet& es, const EntitySet& ea);

/// |es ∩ ea| / |ea|, 0 when ea is empty.
double precision(const EntitySet& es, const EntitySet& ea);

/// Reward of a complete query. Schema-invalid queries score 0.
/// Throws ArgumentError on empty es.
double reward(const Query& query, const EntitySet& es, const KnowledgeBase& kb);

/// Reward evaluator bound to one (E^s, KB) pair; works on interned ids.
class RewardFunction {
 public:
  RewardFunction(const KnowledgeBase& kb, const EntitySet& es);

  double operator()(const Query& query) const;
  double of_result(const ResultSet& result) const;

  /// Entities of E^s that do not occur in the KB make every query score 0.
  bool satisfiable() const { return missing_ == 0; }
  const KnowledgeBase& kb() const { return *kb_; }

 private:
  const KnowledgeBase* kb_;
  std::vector<ValueId> es_ids_;
  std::size_t missing_ = 0;
};

}  // namespace kbq
