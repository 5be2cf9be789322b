#include "kbq/exploration.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>

#include "kbq/errors.hpp"
#include "kbq/reward.hpp"

namespace kbq {

std::vector<Clause> candidate_clauses(const DialogContext& context, const KnowledgeBase& kb) {
  EntitySet mentioned;
  for (const auto& u : context.utterances) mentioned.merge(link_entities(u, kb));
  std::set<Clause> out;
  for (const auto& v : mentioned) {
    FieldMask mask = kb.fields_of_value(v);
    for (std::size_t f = 0; f < kb.num_fields(); ++f) {
      if (mask & (FieldMask{1} << f)) out.insert({kb.fields()[f], v});
    }
  }
  return {out.begin(), out.end()};
}

ExplorationResult systematic_explore(const DialogContext& context, const EntitySet& es,
                                     const KnowledgeBase& kb, int max_clauses) {
  if (max_clauses < 0) throw ArgumentError("max_clauses must be non-negative");
  ExplorationResult result;
  if (es.empty()) return result;
  const RewardFunction rf(kb, es);
  const auto cands = candidate_clauses(context, kb);
  if (cands.size() > 30) throw ArgumentError("too many candidate clauses to enumerate");

  std::vector<std::size_t> field_of(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) field_of[i] = kb.require_field(cands[i].field);

  // Depth-first over clause subsets; a subset that retrieves nothing or
  // loses recall cannot be rescued by adding clauses.
  std::map<std::string, ScoredQuery> found;
  std::vector<std::size_t> chosen;
  FieldMask used = 0;
  auto visit = [&](auto&& self, std::size_t start) -> void {
    Query q;
    for (auto i : chosen) q.clauses.push_back(cands[i]);
    q = canonicalize(std::move(q));
    double r = rf(q);
    if (r <= 0.0) return;
    found.emplace(to_text(q), ScoredQuery{q, r});
    if (static_cast<int>(chosen.size()) >= max_clauses) return;
    for (std::size_t i = start; i < cands.size(); ++i) {
      FieldMask bit = FieldMask{1} << field_of[i];
      if (used & bit) continue;
      used |= bit;
      chosen.push_back(i);
      self(self, i + 1);
      chosen.pop_back();
      used &= ~bit;
    }
  };
  visit(visit, 0);

  for (auto& [_, sq] : found) {
    result.best_reward = std::max(result.best_reward, sq.reward);
    result.entries.push_back(std::move(sq));
  }
  return result;
}

nlohmann::json to_json(const ExplorationResult& result) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : result.entries) {
    entries.push_back({{"query", to_text(e.query)}, {"clauses", e.query.clauses.size()}, {"reward", e.reward}});
  }
  return {{"best_reward", result.best_reward}, {"entries", std::move(entries)}};
}

}  // namespace kbq
