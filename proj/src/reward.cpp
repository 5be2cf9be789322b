#include "kbq/reward.hpp"

#include <algorithm>

#include "kbq/errors.hpp"

namespace kbq {

namespace {

std::size_t overlap(const EntitySet& a, const EntitySet& b) {
  std::size_t n = 0;
  for (const auto& e : a) n += b.contains(e) ? 1 : 0;
  return n;
}

}  // namespace

double recall(const EntitySet& es, const EntitySet& ea) {
  if (es.empty()) throw ArgumentError("recall is undefined for an empty subsequent-entity set");
  return static_cast<double>(overlap(es, ea)) / static_cast<double>(es.size());
}

double precision(const EntitySet& es, const EntitySet& ea) {
  if (ea.empty()) return 0.0;
  return static_cast<double>(overlap(es, ea)) / static_cast<double>(ea.size());
}

double reward(const Query& query, const EntitySet& es, const KnowledgeBase& kb) {
  return RewardFunction(kb, es)(query);
}

RewardFunction::RewardFunction(const KnowledgeBase& kb, const EntitySet& es) : kb_(&kb) {
  if (es.empty()) throw ArgumentError("reward is undefined for an empty subsequent-entity set");
  for (const auto& e : es) {
    auto id = kb.value_id(e);
    if (id < 0) {
      ++missing_;
    } else {
      es_ids_.push_back(static_cast<ValueId>(id));
    }
  }
  std::sort(es_ids_.begin(), es_ids_.end());
}

double RewardFunction::of_result(const ResultSet& result) const {
  if (missing_ > 0 || result.entity_ids.empty()) return 0.0;
  for (ValueId id : es_ids_) {
    if (!std::binary_search(result.entity_ids.begin(), result.entity_ids.end(), id)) return 0.0;
  }
  return static_cast<double>(es_ids_.size()) / static_cast<double>(result.entity_ids.size());
}

double RewardFunction::operator()(const Query& query) const {
  try {
    return of_result(execute(query, *kb_));
  } catch (const Error&) {
    return 0.0;
  }
}

}  // namespace kbq
