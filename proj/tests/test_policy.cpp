#include <algorithm>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "kbq/errors.hpp"

using namespace kbq;

namespace {

struct Tiny {
  KnowledgeBase kb = KnowledgeBase({"cuisine", "area"}, {{"chinese", "south"}, {"indian", "north"}});
  DialogContext dc;
  PolicyConfig pc{10, 2};
  Tiny() { dc.utterances = {fx::words("chinese south")}; }
};

std::vector<std::string> toks(const char* s) { return fx::split(s); }

}  // namespace

TEST_CASE("valid_actions follows the grammar") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  auto tokens_at = [&](const char* prefix) {
    const auto d = step_distribution(PolicyParameters::zeros(t.kb, t.pc), ctx, fx::split(prefix));
    return d.tokens;
  };
  CHECK(tokens_at("") == std::vector<std::string>{"SELECT"});
  CHECK(tokens_at("SELECT * FROM kb") == std::vector<std::string>{"<eoq>", "WHERE"});
  CHECK(tokens_at("SELECT * FROM kb WHERE cuisine =") == std::vector<std::string>{"chinese", "south"});
  CHECK(tokens_at("SELECT * FROM kb WHERE cuisine = chinese") == std::vector<std::string>{"<eoq>", "AND"});
  // a constrained field is not offered again
  CHECK(tokens_at("SELECT * FROM kb WHERE cuisine = chinese AND") == std::vector<std::string>{"area"});
  // the clause cap closes the query
  CHECK(tokens_at("SELECT * FROM kb WHERE cuisine = chinese AND area = south") == std::vector<std::string>{"<eoq>"});
  CHECK_THROWS_AS(tokens_at("SELECT FROM"), StateError);
  CHECK(valid_actions(GrammarState{GrammarStep::Done}, ctx.vocab()).empty());
}

TEST_CASE("step distributions: uniform at zero, normalized for random weights") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  const auto zero = PolicyParameters::zeros(t.kb, t.pc);
  const auto d = step_distribution(zero, ctx, toks("SELECT * FROM kb WHERE"));
  for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / static_cast<double>(d.probs.size())));
  CHECK(step_distribution(zero, ctx, toks("SELECT * FROM")).probs == std::vector<double>{1.0});
  Rng rng(1);
  const auto p = fx::random_params(t.kb, t.pc, rng, 2.0);
  for (const char* prefix : {"SELECT * FROM kb", "SELECT * FROM kb WHERE", "SELECT * FROM kb WHERE area ="}) {
    double s = 0.0;
    for (double x : step_distribution(p, ctx, toks(prefix)).probs) s += x;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("sequence_logprob at zero weights is minus the log branching") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  const auto zero = PolicyParameters::zeros(t.kb, t.pc);
  // choices: {WHERE,<eoq>}=2, fields=2, copies=2, {AND,<eoq>}=2
  const double expect = -4.0 * std::log(2.0);
  CHECK(sequence_logprob(zero, ctx, toks("SELECT * FROM kb WHERE area = south <eoq>")) == doctest::Approx(expect));
  CHECK(sequence_logprob(zero, ctx, toks("SELECT * FROM kb <eoq>")) == doctest::Approx(-std::log(2.0)));
  CHECK_THROWS_AS(sequence_logprob(zero, ctx, toks("SELECT * FROM kb WHERE area = south")), StateError);
}

TEST_CASE("total mass over all terminated sequences is one") {
  Rng rng(2);
  for (int inst = 0; inst < 20; ++inst) {
    const auto kb = fx::random_kb(rng, 3, 5, 2);
    const auto dc = fx::random_context(rng, kb, 2, 1);
    const PolicyConfig pc{10, 2};
    const EncodedContext ctx(dc, kb, pc);
    const auto p = fx::random_params(kb, pc, rng, 1.5);
    double total = 0.0;
    fx::enumerate_sequences(ctx, [&](const std::vector<Action>& s) {
      const double lp = action_logprob(p, ctx, s);
      CHECK(lp <= 0.0);
      total += std::exp(lp);
    });
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("sampling frequencies match exact probabilities") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  Rng prng(3);
  const auto p = fx::random_params(t.kb, t.pc, prng, 1.0);
  std::map<std::string, int> counts;
  Rng rng(4);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample(p, ctx, rng, t.pc.max_len());
    std::string key;
    for (const auto& w : s) key += w + " ";
    ++counts[key];
  }
  fx::enumerate_sequences(ctx, [&](const std::vector<Action>& s) {
    std::string key;
    for (const auto& w : to_tokens(s, ctx.vocab())) key += w + " ";
    const double pr = std::exp(action_logprob(p, ctx, s));
    const double sigma = std::sqrt(n * pr * (1.0 - pr));
    CHECK(std::abs(counts[key] - n * pr) <= 3.0 * sigma + 1e-9);
  });
}

TEST_CASE("sampling respects max_len and is reproducible") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  const auto zero = PolicyParameters::zeros(t.kb, t.pc);
  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i) CHECK(sample(zero, ctx, a, 12) == sample(zero, ctx, b, 12));
  Rng r(6);
  for (int i = 0; i < 200; ++i) {
    const auto s = sample(zero, ctx, r, 8);
    CHECK(s.size() <= 9);  // at most one clause plus <eoq>
    CHECK_NOTHROW(parse_query(s));
  }
  // a cap of zero clauses leaves a single path
  CHECK(sample(zero, ctx, r, 4) == toks("SELECT * FROM kb <eoq>"));
}

TEST_CASE("beam search: exact top-k, sorted, width one is greedy") {
  Rng rng(8);
  for (int inst = 0; inst < 10; ++inst) {
    const auto kb = fx::random_kb(rng, 3, 5, 2);
    const auto dc = fx::random_context(rng, kb, 2, 1);
    const PolicyConfig pc{10, 2};
    const EncodedContext ctx(dc, kb, pc);
    const auto p = fx::random_params(kb, pc, rng, 1.0);
    std::vector<std::pair<double, std::vector<std::string>>> all;
    fx::enumerate_sequences(ctx, [&](const std::vector<Action>& s) {
      all.emplace_back(action_logprob(p, ctx, s), to_tokens(s, ctx.vocab()));
    });
    std::sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first > b.first; });
    const auto beam = beam_search(p, ctx, static_cast<int>(all.size()));
    REQUIRE(beam.size() == all.size());
    for (std::size_t i = 0; i < beam.size(); ++i) CHECK(beam[i].logprob == doctest::Approx(all[i].first));
    for (std::size_t i = 1; i < beam.size(); ++i) CHECK(beam[i - 1].logprob >= beam[i].logprob);
    const auto b3 = beam_search(p, ctx, 3);
    CHECK(b3.size() <= 3);
    for (const auto& s : b3) CHECK_NOTHROW(parse_query(s.tokens));
    CHECK(canonicalize(parse_query(beam_search(p, ctx, 1).front().tokens)) == greedy_query(p, ctx));
  }
}

TEST_CASE("randomized beam search") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  Rng prng(9);
  const auto p = fx::random_params(t.kb, t.pc, prng, 1.0);
  Rng r(10);
  const auto plain = beam_search(p, ctx, 3);
  const auto eps0 = randomized_beam_search(p, ctx, 3, 0.0, r);
  REQUIRE(plain.size() == eps0.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].tokens == eps0[i].tokens);
    CHECK(plain[i].logprob == eps0[i].logprob);
  }
  Rng a(11), b(11);
  const auto ra = randomized_beam_search(p, ctx, 2, 0.5, a);
  const auto rb = randomized_beam_search(p, ctx, 2, 0.5, b);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].tokens == rb[i].tokens);

  // epsilon 1 with one slot walks the grammar uniformly at random
  std::map<std::string, int> counts;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    std::string key;
    const auto walk = randomized_beam_search(p, ctx, 1, 1.0, r);
    for (const auto& w : walk.front().tokens) key += w + " ";
    ++counts[key];
  }
  const auto zero = PolicyParameters::zeros(t.kb, t.pc);
  fx::enumerate_sequences(ctx, [&](const std::vector<Action>& s) {
    std::string key;
    for (const auto& w : to_tokens(s, ctx.vocab())) key += w + " ";
    const double pr = std::exp(action_logprob(zero, ctx, s));
    CHECK(std::abs(counts[key] - n * pr) <= 3.0 * std::sqrt(n * pr * (1.0 - pr)));
  });
  CHECK_THROWS_AS(randomized_beam_search(p, ctx, 2, 1.5, r), ArgumentError);
}

TEST_CASE("logprob_gradient matches central finite differences") {
  Rng rng(12);
  for (int inst = 0; inst < 10; ++inst) {
    const auto kb = fx::random_kb(rng, 3, 5, 2);
    const auto dc = fx::random_context(rng, kb, 3, 2);
    const PolicyConfig pc{8, 2};
    const EncodedContext ctx(dc, kb, pc);
    auto p = fx::random_params(kb, pc, rng, 0.5);
    const auto h = sample_actions(p, ctx, rng, 2);
    const auto tokens = to_tokens(h.actions, ctx.vocab());
    const auto g = logprob_gradient(p, ctx, tokens);
    REQUIRE(g.size() == p.dim());
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
      const double w = p.weights[k];
      p.weights[k] = w + 1e-5;
      const double up = sequence_logprob(p, ctx, tokens);
      p.weights[k] = w - 1e-5;
      const double dn = sequence_logprob(p, ctx, tokens);
      p.weights[k] = w;
      worst = std::max(worst, std::abs((up - dn) / 2e-5 - g[k]));
      scale = std::max(scale, std::abs(g[k]));
    }
    CHECK(worst <= 1e-6 * std::max(scale, 1.0));
  }
}

TEST_CASE("query probabilities marginalize clause orderings") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  Rng rng(13);
  const auto p = fx::random_params(t.kb, t.pc, rng, 1.0);
  const Query q{{{"area", "south"}, {"cuisine", "chinese"}}};
  const auto orders = query_orderings(q, ctx);
  REQUIRE(orders.size() == 2);
  CHECK(to_query(orders.front(), ctx) == q);
  const double expect = std::log(std::exp(action_logprob(p, ctx, orders[0])) + std::exp(action_logprob(p, ctx, orders[1])));
  CHECK(query_logprob(p, ctx, q) == doctest::Approx(expect));
  CHECK(query_orderings(Query{{{"area", "north"}}}, ctx).empty());
  CHECK(query_logprob(p, ctx, Query{{{"area", "north"}}}) == -INFINITY);
}

TEST_CASE("parameters reject a foreign template") {
  Tiny t;
  const EncodedContext ctx(t.dc, t.kb, t.pc);
  auto p = PolicyParameters::zeros(t.kb, PolicyConfig{12, 2});
  CHECK_THROWS(sequence_logprob(p, ctx, toks("SELECT * FROM kb <eoq>")));
}
