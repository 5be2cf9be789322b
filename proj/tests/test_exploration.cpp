#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "kbq/exploration.hpp"
#include "kbq/reward.hpp"

using namespace kbq;

TEST_CASE("candidate_clauses") {
  const auto kb = fx::example_kb();
  DialogContext c;
  c.utterances = {fx::words("south part of town , moderate price please")};
  CHECK(candidate_clauses(c, kb) == std::vector<Clause>{{"area", "south"}, {"pricerange", "moderate"}});
  c.utterances = {fx::words("hello there")};
  CHECK(candidate_clauses(c, kb).empty());
  const KnowledgeBase shared({"name", "area"}, {{"south", "north"}, {"x", "south"}});
  c.utterances = {fx::words("south")};
  CHECK(candidate_clauses(c, shared).size() == 2);
}

TEST_CASE("systematic_explore lists complete and partial queries") {
  const KnowledgeBase kb({"name", "cuisine", "pricerange"},
                         {{"a", "chinese", "moderate"}, {"b", "chinese", "moderate"}, {"c", "chinese", "cheap"},
                          {"d", "indian", "moderate"}});
  DialogContext c;
  c.utterances = {fx::words("chinese food at a moderate price")};
  const auto ex = systematic_explore(c, {"a"}, kb);
  std::vector<std::string> texts;
  for (const auto& e : ex.entries) texts.push_back(to_text(e.query));
  auto has = [&](const char* t) { return std::find(texts.begin(), texts.end(), t) != texts.end(); };
  CHECK(has("SELECT * FROM kb WHERE cuisine = chinese AND pricerange = moderate <eoq>"));
  CHECK(has("SELECT * FROM kb WHERE cuisine = chinese <eoq>"));
  CHECK(has("SELECT * FROM kb WHERE pricerange = moderate <eoq>"));
  double best = 0.0;
  for (const auto& e : ex.entries) {
    CHECK(e.reward > 0.0);
    CHECK(e.query == canonicalize(e.query));
    best = std::max(best, e.reward);
  }
  CHECK(ex.best_reward == best);
  CHECK(systematic_explore(c, {"not_here"}, kb).entries.empty());
  CHECK(systematic_explore(c, {}, kb).best_reward == 0.0);
}

TEST_CASE("max_clauses bounds the entries") {
  const auto kb = fx::example_kb();
  DialogContext c;
  c.utterances = {fx::words("chinese food in the south , moderate")};
  for (const auto& e : systematic_explore(c, {"peking_restaurant"}, kb, 1).entries) CHECK(e.query.clauses.size() <= 1);
}

TEST_CASE("systematic_explore matches brute force on random instances") {
  Rng rng(77);
  for (int inst = 0; inst < 40; ++inst) {
    const auto kb = fx::random_kb(rng, 3, 6, 2);
    const auto c = fx::random_context(rng, kb, 3, 1);
    const auto row = rng.below(kb.num_rows());
    EntitySet es{kb.cell(row, 0)};
    if (rng.bernoulli(0.5)) es.insert(kb.cell(row, 1));
    const auto ex = systematic_explore(c, es, kb, 2);
    std::map<std::string, double> got;
    for (const auto& e : ex.entries) got[to_text(e.query)] = e.reward;
    CHECK(got == fx::brute_force_explore(c, es, kb, 2));
  }
}
