#include "kbq/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kbq/errors.hpp"

namespace kbq {

namespace {

constexpr Action kStartAction{ActionKind::Keyword, 255};

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Scratch buffers reused across the steps of one decode.
struct StepScratch {
  std::vector<Action> valid;
  std::vector<double> scores;
};

double score(const PolicyParameters& params, const EncodedContext& ctx, const GrammarState& gs, Action prev,
             Action a) {
  double s = 0.0;
  const double* w = params.weights.data();
  ctx.visit(gs, prev, a, [&](std::uint32_t i, double v) { s += w[i] * v; });
  return s;
}

// Fills scratch.scores with log-probabilities of scratch.valid.
void log_softmax_step(const PolicyParameters& params, const EncodedContext& ctx, const GrammarState& gs,
                      Action prev, StepScratch& scratch) {
  scratch.scores.resize(scratch.valid.size());
  for (std::size_t i = 0; i < scratch.valid.size(); ++i) {
    scratch.scores[i] = score(params, ctx, gs, prev, scratch.valid[i]);
  }
  const double z = log_sum_exp(scratch.scores);
  for (auto& s : scratch.scores) s -= z;
}

void check_params(const PolicyParameters& params, const EncodedContext& ctx) {
  if (params.weights.size() != ctx.config().dim()) {
    throw ArgumentError("parameter dimension " + std::to_string(params.weights.size()) +
                        " does not match feature space " + std::to_string(ctx.config().dim()));
  }
}

bool token_less(std::span<const Action> a, std::span<const Action> b, const ActionVocabulary& vocab) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == b[i]) continue;
    const auto& ta = vocab.token(a[i]);
    const auto& tb = vocab.token(b[i]);
    if (ta != tb) return ta < tb;
  }
  return a.size() < b.size();
}

ScoredSequence to_scored(const Hypothesis& h, const EncodedContext& ctx) {
  return {to_tokens(h.actions, ctx.vocab()), h.logprob};
}

}  // namespace

PolicyParameters PolicyParameters::zeros(const KnowledgeBase& kb, const PolicyConfig& config) {
  if (config.hash_bits < 4 || config.hash_bits > 30) throw ArgumentError("hash_bits must lie in [4, 30]");
  PolicyParameters p;
  p.config = config;
  p.template_hash = feature_template_hash(kb, config);
  p.weights.assign(config.dim(), 0.0);
  return p;
}

StepDistribution step_distribution(const PolicyParameters& params, const EncodedContext& ctx,
                                   std::span<const std::string> prefix) {
  check_params(params, ctx);
  // Validate the prefix by walking it; a prefix may stop anywhere before <eoq>.
  GrammarState gs = ctx.initial();
  Action prev = kStartAction;
  std::vector<Action> valid;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (gs.terminal()) throw StateError("prefix continues past <eoq>");
    valid_actions_into(gs, ctx.vocab(), valid);
    auto it = std::find_if(valid.begin(), valid.end(), [&](Action a) { return ctx.vocab().token(a) == prefix[i]; });
    if (it == valid.end()) {
      throw StateError("prefix token '" + prefix[i] + "' at position " + std::to_string(i) + " is not grammatical");
    }
    gs = advance_unchecked(gs, *it);
    prev = *it;
  }
  if (gs.terminal()) throw StateError("prefix is already terminated");
  StepScratch scratch;
  valid_actions_into(gs, ctx.vocab(), scratch.valid);
  log_softmax_step(params, ctx, gs, prev, scratch);
  StepDistribution out;
  out.actions = scratch.valid;
  for (std::size_t i = 0; i < scratch.valid.size(); ++i) {
    out.tokens.push_back(ctx.vocab().token(scratch.valid[i]));
    out.probs.push_back(std::exp(scratch.scores[i]));
  }
  return out;
}

double action_logprob(const PolicyParameters& params, const EncodedContext& ctx, std::span<const Action> actions) {
  check_params(params, ctx);
  GrammarState gs = ctx.initial();
  Action prev = kStartAction;
  StepScratch scratch;
  double lp = 0.0;
  for (Action a : actions) {
    valid_actions_into(gs, ctx.vocab(), scratch.valid);
    auto it = std::find(scratch.valid.begin(), scratch.valid.end(), a);
    if (it == scratch.valid.end()) throw StateError("action sequence is not grammatical");
    if (scratch.valid.size() > 1) {
      log_softmax_step(params, ctx, gs, prev, scratch);
      lp += scratch.scores[static_cast<std::size_t>(it - scratch.valid.begin())];
    }
    gs = advance_unchecked(gs, a);
    prev = a;
  }
  if (!gs.terminal()) throw StateError("action sequence is not terminated by <eoq>");
  return lp;
}

double sequence_logprob(const PolicyParameters& params, const EncodedContext& ctx,
                        std::span<const std::string> tokens) {
  auto actions = to_actions(tokens, ctx.vocab(), ctx.config().max_clauses);
  return action_logprob(params, ctx, actions);
}

double accumulate_logprob_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                   std::span<const Action> actions, double scale, std::span<double> out) {
  check_params(params, ctx);
  if (out.size() != params.weights.size()) throw ArgumentError("gradient buffer has the wrong dimension");
  GrammarState gs = ctx.initial();
  Action prev = kStartAction;
  StepScratch scratch;
  double lp = 0.0;
  double* g = out.data();
  for (Action a : actions) {
    valid_actions_into(gs, ctx.vocab(), scratch.valid);
    auto it = std::find(scratch.valid.begin(), scratch.valid.end(), a);
    if (it == scratch.valid.end()) throw StateError("action sequence is not grammatical");
    if (scratch.valid.size() > 1) {
      log_softmax_step(params, ctx, gs, prev, scratch);
      const auto chosen = static_cast<std::size_t>(it - scratch.valid.begin());
      lp += scratch.scores[chosen];
      // phi(chosen) - E_p[phi]
      for (std::size_t i = 0; i < scratch.valid.size(); ++i) {
        const double c = scale * ((i == chosen ? 1.0 : 0.0) - std::exp(scratch.scores[i]));
        if (c == 0.0) continue;
        ctx.visit(gs, prev, scratch.valid[i], [&](std::uint32_t k, double v) { g[k] += c * v; });
      }
    }
    gs = advance_unchecked(gs, a);
    prev = a;
  }
  if (!gs.terminal()) throw StateError("action sequence is not terminated by <eoq>");
  return lp;
}

GradientVector logprob_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                std::span<const std::string> tokens) {
  auto actions = to_actions(tokens, ctx.vocab(), ctx.config().max_clauses);
  GradientVector g(params.weights.size(), 0.0);
  accumulate_logprob_gradient(params, ctx, actions, 1.0, g);
  return g;
}

Hypothesis sample_actions(const PolicyParameters& params, const EncodedContext& ctx, Rng& rng, int clause_limit) {
  check_params(params, ctx);
  Hypothesis h;
  GrammarState gs = initial_state(std::min(clause_limit, ctx.config().max_clauses));
  Action prev = kStartAction;
  StepScratch scratch;
  while (!gs.terminal()) {
    valid_actions_into(gs, ctx.vocab(), scratch.valid);
    std::size_t pick = 0;
    if (scratch.valid.size() > 1) {
      // A clause cap below max_clauses only removes WHERE / AND; the
      // softmax is taken over what survives.
      log_softmax_step(params, ctx, gs, prev, scratch);
      const double u = rng.uniform();
      double acc = 0.0;
      pick = scratch.valid.size() - 1;
      for (std::size_t i = 0; i < scratch.valid.size(); ++i) {
        acc += std::exp(scratch.scores[i]);
        if (u < acc) {
          pick = i;
          break;
        }
      }
      h.logprob += scratch.scores[pick];
    }
    const Action a = scratch.valid[pick];
    h.actions.push_back(a);
    gs = advance_unchecked(gs, a);
    prev = a;
  }
  return h;
}

std::vector<std::string> sample(const PolicyParameters& params, const EncodedContext& ctx, Rng& rng, int max_len) {
  if (max_len < 4) throw ArgumentError("max_len must allow SELECT * FROM kb");
  auto h = sample_actions(params, ctx, rng, (max_len - 4) / 4);
  return to_tokens(h.actions, ctx.vocab());
}

std::vector<Hypothesis> beam_actions(const PolicyParameters& params, const EncodedContext& ctx, int beam_width,
                                     double epsilon, Rng* rng) {
  check_params(params, ctx);
  if (beam_width < 1) throw ArgumentError("beam width must be at least 1");
  if (epsilon < 0.0 || epsilon > 1.0) throw ArgumentError("epsilon must lie in [0, 1]");
  if (epsilon > 0.0 && rng == nullptr) throw ArgumentError("randomized beam search needs a random stream");

  struct Live {
    Hypothesis h;
    GrammarState gs;
  };
  std::vector<Live> beam{{Hypothesis{}, ctx.initial()}};
  StepScratch scratch;
  const auto& vocab = ctx.vocab();
  auto ranked_before = [&](const Live& a, const Live& b) {
    if (a.h.logprob != b.h.logprob) return a.h.logprob > b.h.logprob;
    return token_less(a.h.actions, b.h.actions, vocab);
  };

  while (std::any_of(beam.begin(), beam.end(), [](const Live& l) { return !l.gs.terminal(); })) {
    std::vector<Live> cands;
    for (const auto& l : beam) {
      if (l.gs.terminal()) {
        cands.push_back(l);
        continue;
      }
      valid_actions_into(l.gs, vocab, scratch.valid);
      const Action prev = l.h.actions.empty() ? kStartAction : l.h.actions.back();
      if (scratch.valid.size() > 1) {
        log_softmax_step(params, ctx, l.gs, prev, scratch);
      } else {
        scratch.scores.assign(1, 0.0);
      }
      for (std::size_t i = 0; i < scratch.valid.size(); ++i) {
        Live next{l.h, advance_unchecked(l.gs, scratch.valid[i])};
        next.h.actions.push_back(scratch.valid[i]);
        next.h.logprob += scratch.scores[i];
        cands.push_back(std::move(next));
      }
    }
    std::sort(cands.begin(), cands.end(), ranked_before);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(beam_width), cands.size());
    if (epsilon <= 0.0) {
      cands.resize(k);
      beam = std::move(cands);
    } else {
      std::vector<Live> chosen;
      chosen.reserve(k);
      // cands stays rank ordered; taken entries are erased.
      for (std::size_t slot = 0; slot < k; ++slot) {
        std::size_t pick = 0;
        if (rng->uniform() < epsilon) pick = static_cast<std::size_t>(rng->below(cands.size()));
        chosen.push_back(std::move(cands[pick]));
        cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      std::sort(chosen.begin(), chosen.end(), ranked_before);
      beam = std::move(chosen);
    }
  }
  std::vector<Hypothesis> out;
  out.reserve(beam.size());
  for (auto& l : beam) out.push_back(std::move(l.h));
  return out;
}

std::vector<ScoredSequence> beam_search(const PolicyParameters& params, const EncodedContext& ctx, int beam_width) {
  std::vector<ScoredSequence> out;
  for (const auto& h : beam_actions(params, ctx, beam_width, 0.0, nullptr)) out.push_back(to_scored(h, ctx));
  return out;
}

std::vector<ScoredSequence> randomized_beam_search(const PolicyParameters& params, const EncodedContext& ctx,
                                                   int beam_width, double epsilon, Rng& rng) {
  std::vector<ScoredSequence> out;
  for (const auto& h : beam_actions(params, ctx, beam_width, epsilon, &rng)) out.push_back(to_scored(h, ctx));
  return out;
}

Query to_query(std::span<const Action> actions, const EncodedContext& ctx) {
  Query q;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].kind == ActionKind::Field) {
      if (i + 2 >= actions.size() || actions[i + 2].kind != ActionKind::Copy) {
        throw StateError("incomplete clause in action sequence");
      }
      q.clauses.push_back({ctx.vocab().token(actions[i]), ctx.vocab().token(actions[i + 2])});
    }
  }
  return q;
}

Query greedy_query(const PolicyParameters& params, const EncodedContext& ctx) {
  auto beam = beam_actions(params, ctx, 1, 0.0, nullptr);
  return canonicalize(to_query(beam.front().actions, ctx));
}

std::vector<std::vector<Action>> query_orderings(const Query& query, const EncodedContext& ctx) {
  const auto& vocab = ctx.vocab();
  const std::size_t k = query.clauses.size();
  if (static_cast<int>(k) > ctx.config().max_clauses) return {};
  std::vector<std::uint32_t> fields(k), copies(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!vocab.lookup_field(query.clauses[i].field, fields[i])) return {};
    if (!vocab.lookup_copy(query.clauses[i].value, copies[i])) return {};
    for (std::size_t j = 0; j < i; ++j) {
      if (fields[j] == fields[i]) return {};
    }
  }
  const std::vector<Action> head = {{ActionKind::Keyword, static_cast<std::uint32_t>(Keyword::Select)},
                                    {ActionKind::Keyword, static_cast<std::uint32_t>(Keyword::Star)},
                                    {ActionKind::Keyword, static_cast<std::uint32_t>(Keyword::From)},
                                    {ActionKind::Keyword, static_cast<std::uint32_t>(Keyword::Table)}};
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<Action>> out;
  do {
    std::vector<Action> seq = head;
    for (std::size_t i = 0; i < k; ++i) {
      seq.push_back({ActionKind::Keyword, static_cast<std::uint32_t>(i == 0 ? Keyword::Where : Keyword::And)});
      seq.push_back({ActionKind::Field, fields[order[i]]});
      seq.push_back({ActionKind::Keyword, static_cast<std::uint32_t>(Keyword::Equals)});
      seq.push_back({ActionKind::Copy, copies[order[i]]});
    }
    seq.push_back({ActionKind::Eoq, 0});
    out.push_back(std::move(seq));
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

double query_logprob(const PolicyParameters& params, const EncodedContext& ctx, const Query& query) {
  auto seqs = query_orderings(query, ctx);
  if (seqs.empty()) return -std::numeric_limits<double>::infinity();
  std::vector<double> lps;
  lps.reserve(seqs.size());
  for (const auto& s : seqs) lps.push_back(action_logprob(params, ctx, s));
  return log_sum_exp(lps);
}

double accumulate_query_gradient(const PolicyParameters& params, const EncodedContext& ctx, const Query& query,
                                 double scale, std::span<double> out) {
  auto seqs = query_orderings(query, ctx);
  if (seqs.empty()) return -std::numeric_limits<double>::infinity();
  if (seqs.size() == 1) return accumulate_logprob_gradient(params, ctx, seqs[0], scale, out);
  std::vector<double> lps;
  lps.reserve(seqs.size());
  for (const auto& s : seqs) lps.push_back(action_logprob(params, ctx, s));
  const double total = log_sum_exp(lps);
  if (!std::isfinite(total)) return total;
  // d log sum_o pi_o = sum_o (pi_o / pi) d log pi_o
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const double w = std::exp(lps[i] - total);
    if (w > 0.0) accumulate_logprob_gradient(params, ctx, seqs[i], scale * w, out);
  }
  return total;
}

}  // namespace kbq
