#include "doctest.h"
#include "fixtures.hpp"
#include "kbq/errors.hpp"

using namespace kbq;

TEST_CASE("make_context keeps 2q-1 utterances ending with the user") {
  const auto d = fx::example_dialog();
  const auto c = make_context(d, 2);
  REQUIRE(c.utterances.size() == 3);
  CHECK(c.utterances.back() == d.turns[1].user);
  CHECK_THROWS_AS(make_context(d, 0), ArgumentError);
  CHECK_THROWS_AS(make_context(d, 5), ArgumentError);
}

TEST_CASE("link_entities") {
  const auto kb = fx::example_kb();
  CHECK(link_entities(fx::words("how about peking_restaurant , phone 2343-4040"), kb) ==
        EntitySet{"peking_restaurant", "2343-4040"});
  CHECK(link_entities(fx::words("nothing to see here"), kb).empty());
  // multi-token span joined by '_'
  CHECK(link_entities(fx::words("try la tasca tonight"), kb) == EntitySet{"la_tasca"});
  // a value shared by two fields is linked once
  const KnowledgeBase shared({"name", "area"}, {{"south", "south"}, {"x", "north"}});
  CHECK(link_entities(fx::words("the south"), shared) == EntitySet{"south"});
}

TEST_CASE("subsequent_entities and suffix monotonicity") {
  const auto kb = fx::example_kb();
  const auto d = fx::example_dialog();
  CHECK(subsequent_entities(d, 2, kb) == EntitySet{"peking_restaurant", "2343-4040"});
  CHECK(subsequent_entities(d, 4, kb).empty());
  for (int q = 1; q < d.num_turns(); ++q) {
    const auto a = subsequent_entities(d, q, kb);
    const auto b = subsequent_entities(d, q + 1, kb);
    CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  }
  // positional, not novelty based: an entity also mentioned earlier still counts
  Dialog e = d;
  e.turns[0].user = fx::words("is peking_restaurant good ?");
  CHECK(subsequent_entities(e, 2, kb).contains("peking_restaurant"));
}

TEST_CASE("heuristic_position") {
  const auto kb = fx::example_kb();
  CHECK(heuristic_position(fx::example_dialog(), kb) == 2);
  Dialog echo;
  echo.turns = {{fx::words("chinese food"), fx::words("chinese , ok")}, {fx::words("south"), fx::words("south it is")}};
  CHECK_FALSE(heuristic_position(echo, kb).has_value());
}

TEST_CASE("corpus json round trip and load errors") {
  const auto d = fx::example_dialog();
  const auto back = dialog_from_json(dialog_to_json(d));
  CHECK(back.turns.size() == d.turns.size());
  CHECK(back.turns[1].user == d.turns[1].user);
  CHECK(canonicalize(*back.gold_query) == canonicalize(*d.gold_query));
  CHECK(back.gold_position == 2);
  CHECK(corpus_from_json(nlohmann::json::array()).empty());
  const auto user_only = nlohmann::json::parse(R"([{"turns":[{"user":"hi"}]}])");
  CHECK_THROWS_AS(corpus_from_json(user_only), LoadError);
  const auto bad_pos = nlohmann::json::parse(R"([{"turns":[{"user":"hi","system":"yo"}],"gold_position":3}])");
  CHECK_THROWS_AS(corpus_from_json(bad_pos), LoadError);
  const auto bad_query = nlohmann::json::parse(R"([{"turns":[{"user":"hi","system":"yo"}],"gold_query":"SELECT *"}])");
  CHECK_THROWS_AS(corpus_from_json(bad_query), LoadError);
  try {
    corpus_from_json(nlohmann::json::parse(R"([{"turns":[{"user":"a","system":"b"}]},{"turns":[]}])"));
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("dialog 1") != std::string::npos);
  }
}

TEST_CASE("link_entities output lies in the kb value set") {
  Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    const auto kb = fx::random_kb(rng, 3, 6, 3);
    const auto c = fx::random_context(rng, kb, 3, 3);
    for (const auto& e : link_entities(c.utterances[0], kb)) CHECK(kb.value_id(e) >= 0);
  }
}
