#include "doctest.h"
#include "fixtures.hpp"
#include "kbq/errors.hpp"
#include "kbq/reward.hpp"

using namespace kbq;

TEST_CASE("recall and precision") {
  CHECK(recall({"peking_restaurant", "2343-4040"}, {"peking_restaurant", "chinese", "south", "moderate", "2343-4040"}) ==
        1.0);
  CHECK(recall({"x"}, {}) == 0.0);
  CHECK(precision({"a", "b"}, {"a", "b", "c", "d"}) == 0.5);
  CHECK(precision({"a"}, {}) == 0.0);
  CHECK(precision({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK_THROWS_AS(recall({}, {"a"}), ArgumentError);
}

TEST_CASE("reward on the example kb") {
  const auto kb = fx::example_kb();
  const EntitySet es{"peking_restaurant", "2343-4040"};
  CHECK(reward(Query{{{"area", "south"}, {"pricerange", "moderate"}}}, es, kb) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(reward(Query{{{"cuisine", "spanish"}}}, es, kb) == 0.0);
  // the empty query on es = one full row: |es| / |all distinct cell values|
  EntitySet row{"peking_restaurant", "chinese", "south", "moderate", "2343-4040"};
  EntitySet all;
  for (std::size_t r = 0; r < kb.num_rows(); ++r) {
    for (std::size_t f = 0; f < kb.num_fields(); ++f) all.insert(kb.cell(r, f));
  }
  CHECK(reward(Query{}, row, kb) == doctest::Approx(5.0 / static_cast<double>(all.size())));
  CHECK(reward(Query{{{"stars", "5"}}}, es, kb) == 0.0);
  CHECK_THROWS_AS(reward(Query{}, {}, kb), ArgumentError);
}

TEST_CASE("RewardFunction agrees with the set-based reward") {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto kb = fx::random_kb(rng, 3, 8, 3);
    EntitySet es;
    const auto row = rng.below(kb.num_rows());
    for (std::size_t f = 0; f < kb.num_fields(); ++f) {
      if (rng.bernoulli(0.5)) es.insert(kb.cell(row, f));
    }
    if (es.empty()) es.insert(kb.cell(row, 0));
    const RewardFunction rf(kb, es);
    Query q;
    for (std::size_t f = 0; f < kb.num_fields(); ++f) {
      if (rng.bernoulli(0.5)) q.clauses.push_back({kb.fields()[f], kb.cell(rng.below(kb.num_rows()), f)});
    }
    CHECK(rf(q) == reward(q, es, kb));
  }
  const auto kb = fx::example_kb();
  CHECK_FALSE(RewardFunction(kb, {"not_in_kb"}).satisfiable());
}
