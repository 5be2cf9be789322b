#include "doctest.h"
#include "fixtures.hpp"
#include "kbq/errors.hpp"
#include "kbq/metrics.hpp"
#include "kbq/reward.hpp"
#include "kbq/synth.hpp"

using namespace kbq;

TEST_CASE("is_partial") {
  const Query gold{{{"cuisine", "chinese"}, {"pricerange", "moderate"}}};
  CHECK(is_partial(Query{{{"cuisine", "chinese"}}}, gold));
  CHECK_FALSE(is_partial(Query{{{"pricerange", "moderate"}, {"cuisine", "chinese"}}}, gold));
  CHECK_FALSE(is_partial(Query{{{"area", "south"}}}, gold));
  CHECK_FALSE(is_partial(Query{}, gold));
}

TEST_CASE("summaries at zero weights and the recomputation oracle") {
  BenchConfig cfg;
  cfg.n_train = 30;
  cfg.n_val = 10;
  cfg.n_test = 10;
  cfg.seed = 4;
  const auto bench = generate(cfg);
  const auto p = PolicyParameters::zeros(bench.kb, PolicyConfig{});
  const auto preds = predict_queries(p, bench.train, gold_positions(bench.train), bench.kb);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& d = bench.train[i];
    const auto es = subsequent_entities(d, *d.gold_position, bench.kb);
    const double r = es.empty() ? 0.0 : reward(preds[i].predicted, es, bench.kb);
    CHECK(preds[i].reward == r);
    total += r;
  }
  CHECK(total_reward(p, bench.train, bench.kb) == doctest::Approx(total));
  CHECK(total >= 0.0);
  // the uniform policy stops right after the table token
  CHECK(query_accuracy(p, bench.train, bench.kb) == 0.0);
  const auto m = summarize(preds, bench.train);
  CHECK(m.has_gold);
  CHECK(m.dialogs == bench.train.size());
  CHECK_THROWS_AS(query_accuracy(p, {}, bench.kb), ArgumentError);
  // parallel and serial kernels agree
  const auto par = predict_queries(p, bench.train, gold_positions(bench.train), bench.kb, 4);
  const auto ser = predict_queries_serial(p, bench.train, gold_positions(bench.train), bench.kb);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].predicted == ser[i].predicted);
    CHECK(par[i].reward == ser[i].reward);
  }
}

TEST_CASE("accuracy ignores clause order") {
  const auto kb = fx::example_kb();
  Dialog d = fx::example_dialog();
  d.gold_query = Query{{{"pricerange", "moderate"}, {"area", "south"}}};
  std::vector<QueryPrediction> preds{{canonicalize(Query{{{"area", "south"}, {"pricerange", "moderate"}}}), 2, true, 0.4}};
  const auto m = summarize(preds, {d});
  CHECK(m.query_accuracy == 1.0);
  CHECK(m.piq_ratio == 0.0);
  preds[0].predicted = Query{{{"area", "south"}}};
  CHECK(summarize(preds, {d}).piq_ratio == 1.0);
}
