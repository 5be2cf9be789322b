#pragma once

// Shared fixtures and exhaustive oracles for the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kbq/dialog.hpp"
#include "kbq/buffers.hpp"
#include "kbq/estimators.hpp"
#include "kbq/exploration.hpp"
#include "kbq/features.hpp"
#include "kbq/grammar.hpp"
#include "kbq/kb.hpp"
#include "kbq/policy.hpp"
#include "kbq/reward.hpp"
#include "kbq/rng.hpp"

namespace fx {

using kbq::Action;
using kbq::Dialog;
using kbq::KnowledgeBase;

// Four-row restaurant KB with the peking_restaurant row of the running example.
inline KnowledgeBase example_kb() {
  return KnowledgeBase({"name", "cuisine", "area", "pricerange", "phone"},
                       {{"peking_restaurant", "chinese", "south", "moderate", "2343-4040"},
                        {"golden_wok", "chinese", "north", "moderate", "2343-1111"},
                        {"la_tasca", "spanish", "south", "cheap", "2343-2222"},
                        {"curry_king", "indian", "east", "expensive", "2343-3333"}});
}

inline kbq::Utterance words(const std::string& s) { return kbq::tokenize(s); }

// Whitespace split with case kept, for grammar token sequences.
inline std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// The user asks for a moderate place in the south; the agent fires the query
// at turn 2 and mentions the restaurant and its phone number afterwards.
inline Dialog example_dialog() {
  Dialog d;
  d.turns = {{words("hello , i need a restaurant"), words("what area and price range ?")},
             {words("south part of town , moderate price please"), words("how about peking_restaurant ?")},
             {words("what is the phone number ?"), words("the number is 2343-4040")},
             {words("thanks bye"), words("goodbye")}};
  d.gold_query = kbq::Query{{{"area", "south"}, {"pricerange", "moderate"}}};
  d.gold_position = 2;
  return d;
}

// Random small KB over fields f0..f{nf-1} with values v<field>_<k>.
inline KnowledgeBase random_kb(kbq::Rng& rng, int nf, int rows, int card) {
  std::vector<std::string> fields;
  for (int f = 0; f < nf; ++f) fields.push_back("f" + std::to_string(f));
  std::vector<std::vector<std::string>> cells;
  for (int r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (int f = 0; f < nf; ++f) {
      const auto k = f == 0 ? static_cast<std::uint64_t>(r) : rng.below(static_cast<std::uint64_t>(card));
      row.push_back("v" + std::to_string(f) + "_" + std::to_string(k));
    }
    cells.push_back(std::move(row));
  }
  return KnowledgeBase(fields, cells);
}

// Context that mentions a few KB values plus filler words.
inline kbq::DialogContext random_context(kbq::Rng& rng, const KnowledgeBase& kb, int mentions, int fillers) {
  kbq::Utterance u;
  for (int i = 0; i < mentions; ++i) {
    const auto row = rng.below(kb.num_rows());
    const auto f = rng.below(kb.num_fields());
    u.push_back(kb.cell(row, f));
  }
  static const char* kFiller[] = {"please", "want", "a", "place", "food", "the", "in"};
  for (int i = 0; i < fillers; ++i) u.push_back(kFiller[rng.below(7)]);
  kbq::DialogContext c;
  c.utterances = {u};
  c.query_turn = 1;
  return c;
}

inline kbq::PolicyParameters random_params(const KnowledgeBase& kb, const kbq::PolicyConfig& pc, kbq::Rng& rng,
                                           double scale) {
  auto p = kbq::PolicyParameters::zeros(kb, pc);
  for (auto& w : p.weights) w = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

// Every terminated action sequence reachable under the clause limit.
inline void enumerate_sequences(const kbq::EncodedContext& ctx,
                                const std::function<void(const std::vector<Action>&)>& visit) {
  std::vector<Action> prefix;
  std::function<void(const kbq::GrammarState&)> rec = [&](const kbq::GrammarState& gs) {
    if (gs.terminal()) {
      visit(prefix);
      return;
    }
    for (const Action a : kbq::valid_actions(gs, ctx.vocab())) {
      prefix.push_back(a);
      rec(kbq::advance(gs, a, ctx.vocab()));
      prefix.pop_back();
    }
  };
  rec(ctx.initial());
}

inline std::size_t count_sequences(const kbq::EncodedContext& ctx) {
  std::size_t n = 0;
  enumerate_sequences(ctx, [&](const std::vector<Action>&) { ++n; });
  return n;
}

// Exact gradient of E_pi[R] by enumeration; `include` selects the sequences
// that contribute (all of them for the plain expected reward).
inline std::vector<double> exact_reward_gradient(
    const kbq::PolicyParameters& params, const kbq::EncodedContext& ctx, const kbq::QueryRewarder& reward,
    const std::function<bool(const kbq::Query&)>& include = [](const kbq::Query&) { return true; },
    double* mass_out = nullptr) {
  std::vector<double> g(params.dim(), 0.0);
  double mass = 0.0;
  kbq::Query q;
  enumerate_sequences(ctx, [&](const std::vector<Action>& s) {
    const double r = reward.of_actions(s, ctx, &q);
    if (!include(q)) return;
    const double p = std::exp(kbq::action_logprob(params, ctx, s));
    mass += p;
    if (r > 0.0) kbq::accumulate_logprob_gradient(params, ctx, s, p * r, g);
  });
  if (mass_out) *mass_out = mass;
  return g;
}

// Positive-reward queries among all grammatical sequences over the context,
// keyed by query text.
inline std::map<std::string, double> brute_force_explore(const kbq::DialogContext& c, const kbq::EntitySet& es,
                                                         const KnowledgeBase& kb, int max_clauses) {
  const kbq::EncodedContext ctx(c, kb, kbq::PolicyConfig{8, max_clauses});
  std::map<std::string, double> out;
  enumerate_sequences(ctx, [&](const std::vector<Action>& s) {
    const kbq::Query q = kbq::canonicalize(kbq::to_query(s, ctx));
    const double r = kbq::reward(q, es, kb);
    if (r > 0.0) out[kbq::to_text(q)] = r;
  });
  return out;
}

// E[min(n, Binomial(draws, p))] for the rejection sampler's accepted count.
inline double expected_accepted(int n, int draws, double p) {
  double e = 0.0;
  double logc = 0.0;  // log C(draws, k)
  for (int k = 0; k <= draws; ++k) {
    if (k > 0) logc += std::log(static_cast<double>(draws - k + 1)) - std::log(static_cast<double>(k));
    double lp = logc;
    if (k > 0) lp += k * std::log(p);
    if (draws - k > 0) lp += (draws - k) * std::log1p(-p);
    if (p <= 0.0) lp = k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) lp = k == draws ? 0.0 : -INFINITY;
    e += std::exp(lp) * std::min(k, n);
  }
  return e;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Mean and standard error of projections of repeated estimates onto fixed
// directions.
struct Projection {
  std::vector<double> dir;
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;

  void add(const std::vector<double>& g) {
    const double v = dot(dir, g);
    sum += v;
    sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double stderr_() const {
    const double m = mean();
    const double var = std::max(sq / static_cast<double>(n) - m * m, 0.0);
    return std::sqrt(var / static_cast<double>(n));
  }
};

inline std::vector<double> random_direction(std::size_t dim, kbq::Rng& rng) {
  std::vector<double> d(dim);
  for (auto& x : d) x = 2.0 * rng.uniform() - 1.0;
  return d;
}

}  // namespace fx

namespace fx {

// Small correlated instance: four rows, a context naming a cuisine and a
// price, and E^s holding the first restaurant. 31 terminated sequences.
struct TinyEstimation {
  kbq::KnowledgeBase kb{{"name", "cuisine", "pricerange"},
                        {{"a", "chinese", "moderate"},
                         {"b", "chinese", "moderate"},
                         {"c", "chinese", "cheap"},
                         {"d", "indian", "moderate"}}};
  kbq::DialogContext dc;
  kbq::PolicyConfig pc{10, 2};
  kbq::EntitySet es{"a"};

  TinyEstimation() {
    dc.utterances = {words("chinese moderate")};
    dc.query_turn = 1;
  }
};

inline kbq::BufferPair explored_pair(const kbq::DialogContext& dc, const kbq::EntitySet& es,
                                     const kbq::KnowledgeBase& kb, int max_clauses) {
  return kbq::seed_buffer_pair(kbq::systematic_explore(dc, es, kb, max_clauses));
}

}  // namespace fx
