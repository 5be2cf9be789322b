#include "doctest.h"
#include "fixtures.hpp"
#include "kbq/errors.hpp"
#include "kbq/position.hpp"

using namespace kbq;

namespace {

// The query turn is the one whose user utterance says "ready"; turn counts
// and positions vary.
std::vector<Dialog> separable_corpus(Rng& rng, int n) {
  std::vector<Dialog> out;
  for (int i = 0; i < n; ++i) {
    Dialog d;
    const int m = 2 + static_cast<int>(rng.below(4));
    const int q = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    for (int t = 1; t <= m; ++t) {
      d.turns.push_back({fx::words(t == q ? "i am ready now" : "just chatting here"), fx::words("ok")});
    }
    d.gold_position = q;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<std::optional<int>> gold_labels(const std::vector<Dialog>& c) {
  std::vector<std::optional<int>> out;
  for (const auto& d : c) out.push_back(d.gold_position);
  return out;
}

}  // namespace

TEST_CASE("first crossing and fallback") {
  CHECK(first_crossing({0.1, 0.8, 0.9}, 0.5) == 2);
  CHECK_FALSE(first_crossing({0.1, 0.2}, 0.5).has_value());
  CHECK(first_crossing({0.5}, 0.5) == 1);
}

TEST_CASE("separable corpus is learnt; metrics on exact and late labels") {
  Rng rng(1);
  const auto kb = fx::example_kb();
  const auto corpus = separable_corpus(rng, 200);
  PositionConfig cfg;
  cfg.seed = 3;
  const auto model = train_position(corpus, gold_labels(corpus), kb, cfg);
  CHECK_FALSE(model.degenerate);
  const auto m = position_metrics(model, corpus, kb);
  CHECK(m.accuracy >= 0.99);
  CHECK(m.average_turn_difference <= 0.01);
  if (m.accuracy == 1.0) CHECK(m.average_turn_difference == 0.0);

  // shift every gold label one turn earlier where possible: predictions become one turn late
  std::vector<Dialog> shifted;
  for (const auto& d : corpus) {
    if (*d.gold_position < 2 || predict_position(model, d, kb) != *d.gold_position) continue;
    Dialog e = d;
    e.gold_position = *d.gold_position - 1;
    shifted.push_back(e);
  }
  REQUIRE_FALSE(shifted.empty());
  const auto late = position_metrics(model, shifted, kb);
  CHECK(late.accuracy == 0.0);
  CHECK(late.average_turn_difference == doctest::Approx(1.0));
}

TEST_CASE("fixed seed gives identical weights; all-positive labels are flagged") {
  Rng rng(2);
  const auto kb = fx::example_kb();
  const auto corpus = separable_corpus(rng, 50);
  PositionConfig cfg;
  cfg.seed = 5;
  cfg.epochs = 5;
  CHECK(train_position(corpus, gold_labels(corpus), kb, cfg).weights ==
        train_position(corpus, gold_labels(corpus), kb, cfg).weights);
  std::vector<std::optional<int>> first(corpus.size(), 1);
  const auto deg = train_position(corpus, first, kb, cfg);
  CHECK(deg.degenerate);
  for (const auto& d : corpus) CHECK(predict_position(deg, d, kb) == 1);
}

TEST_CASE("position argument errors") {
  const auto kb = fx::example_kb();
  std::vector<Dialog> corpus{fx::example_dialog()};
  PositionConfig cfg;
  CHECK_THROWS_AS(train_position(corpus, {std::nullopt}, kb, cfg), ArgumentError);
  CHECK_THROWS_AS(train_position(corpus, {9}, kb, cfg), ArgumentError);
  CHECK_THROWS_AS(position_metrics(train_position(corpus, {2}, kb, cfg), {}, kb), ArgumentError);
  cfg.tau = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}
