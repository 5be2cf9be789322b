#pragma once

// Autoregressive log-linear policy over grammar-valid query actions:
//
//   pi(a_t | a_<t, c) = exp(w . phi(c, a_<t, a_t)) / sum_{a' valid} exp(w . phi(c, a_<t, a'))
//
// Steps with a single valid action are forced and contribute nothing to the
// log-probability or its gradient.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kbq/features.hpp"
#include "kbq/kb.hpp"
#include "kbq/rng.hpp"

namespace kbq {

using GradientVector = std::vector<double>;

struct PolicyParameters {
  PolicyConfig config;
  std::uint64_t template_hash = 0;
  std::vector<double> weights;

  std::size_t dim() const { return weights.size(); }

  /// All-zero weights: the uniform policy over valid actions.
  static PolicyParameters zeros(const KnowledgeBase& kb, const PolicyConfig& config);
};

struct StepDistribution {
  std::vector<Action> actions;
  std::vector<std::string> tokens;
  std::vector<double> probs;
};

struct Hypothesis {
  std::vector<Action> actions;
  double logprob = 0.0;
};

struct ScoredSequence {
  std::vector<std::string> tokens;
  double logprob = 0.0;
};

// Token-level operations. Prefixes and sequences must be grammatical under
// the context's vocabulary, otherwise StateError is thrown.

StepDistribution step_distribution(const PolicyParameters& params, const EncodedContext& ctx,
                                   std::span<const std::string> prefix);

double sequence_logprob(const PolicyParameters& params, const EncodedContext& ctx,
                        std::span<const std::string> tokens);

/// Ancestral sample. Continuations that would push the query past `max_len`
/// tokens (excluding <eoq>) are masked, so the draw always terminates.
std::vector<std::string> sample(const PolicyParameters& params, const EncodedContext& ctx, Rng& rng,
                                int max_len);

std::vector<ScoredSequence> beam_search(const PolicyParameters& params, const EncodedContext& ctx,
                                        int beam_width);

/// Each beam slot takes a uniformly random surviving candidate with
/// probability epsilon instead of the next best one.
std::vector<ScoredSequence> randomized_beam_search(const PolicyParameters& params, const EncodedContext& ctx,
                                                   int beam_width, double epsilon, Rng& rng);

GradientVector logprob_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                std::span<const std::string> tokens);

// Action-level kernels used by the estimators.

double action_logprob(const PolicyParameters& params, const EncodedContext& ctx, std::span<const Action> actions);

/// out += scale * d log pi(actions) / dw. Returns log pi(actions).
double accumulate_logprob_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                   std::span<const Action> actions, double scale, std::span<double> out);

Hypothesis sample_actions(const PolicyParameters& params, const EncodedContext& ctx, Rng& rng,
                          int clause_limit);

std::vector<Hypothesis> beam_actions(const PolicyParameters& params, const EncodedContext& ctx, int beam_width,
                                     double epsilon, Rng* rng);

/// Greedy decode (beam width 1) as a query.
Query greedy_query(const PolicyParameters& params, const EncodedContext& ctx);

/// Query denoted by a complete action sequence.
Query to_query(std::span<const Action> actions, const EncodedContext& ctx);

// Query-level probabilities marginalize over clause orderings: a canonical
// query with k clauses is produced by k! token sequences.

/// Action sequences of every clause ordering. Empty if some clause cannot be
/// produced in this context.
std::vector<std::vector<Action>> query_orderings(const Query& query, const EncodedContext& ctx);

/// log sum over orderings; -infinity if the query is unreachable.
double query_logprob(const PolicyParameters& params, const EncodedContext& ctx, const Query& query);

/// out += scale * d log pi(query) / dw. Returns log pi(query).
double accumulate_query_gradient(const PolicyParameters& params, const EncodedContext& ctx, const Query& query,
                                 double scale, std::span<double> out);

}  // namespace kbq
