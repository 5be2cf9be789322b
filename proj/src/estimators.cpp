#include "kbq/estimators.hpp"

#include <cmath>
#include <limits>

#include "kbq/errors.hpp"

namespace kbq {

double QueryRewarder::operator()(const Query& canonical) const {
  std::string key = to_text(canonical);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const double r = rf_(canonical);
  memo_.emplace(std::move(key), r);
  return r;
}

double QueryRewarder::of_actions(std::span<const Action> actions, const EncodedContext& ctx,
                                 Query* canonical_out) const {
  Query q = canonicalize(to_query(actions, ctx));
  const double r = (*this)(q);
  if (canonical_out) *canonical_out = std::move(q);
  return r;
}

std::pair<double, double> clip_buffer_probs(double pi_bh, double pi_bo, double alpha_h, double alpha_o) {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(pi_bh) || !unit(pi_bo) || !unit(alpha_h) || !unit(alpha_o)) {
    throw ArgumentError("buffer probabilities and clipping thresholds must lie in [0, 1]");
  }
  const double ch = std::max(pi_bh, alpha_h);
  const double co = std::min(std::max((1.0 - ch) * alpha_o, pi_bo), 1.0 - ch);
  return {ch, co};
}

double buffer_probability(const PolicyParameters& params, const EncodedContext& ctx, const QueryBuffer& buffer) {
  double total = 0.0;
  for (const auto& [_, sq] : buffer) {
    const double lp = query_logprob(params, ctx, sq.query);
    if (std::isfinite(lp)) total += std::exp(lp);
  }
  return std::min(total, 1.0);
}

namespace {

struct BufferTerm {
  double mass = 0.0;
  std::vector<const ScoredQuery*> queries;
  std::vector<double> logprobs;
};

BufferTerm buffer_term(const PolicyParameters& params, const EncodedContext& ctx, const QueryBuffer& buffer) {
  BufferTerm t;
  for (const auto& [_, sq] : buffer) {
    const double lp = query_logprob(params, ctx, sq.query);
    if (!std::isfinite(lp)) continue;
    t.queries.push_back(&sq);
    t.logprobs.push_back(lp);
  }
  if (t.logprobs.empty()) return t;
  double m = -std::numeric_limits<double>::infinity();
  for (double lp : t.logprobs) m = std::max(m, lp);
  double s = 0.0;
  for (double lp : t.logprobs) s += std::exp(lp - m);
  const double log_mass = m + std::log(s);
  t.mass = std::min(std::exp(log_mass), 1.0);
  // Turn log pi into log pi+ = log pi - log pi_B.
  for (double& lp : t.logprobs) lp -= log_mass;
  return t;
}

// weight * sum_{a in B} pi+(a) R(a) grad log pi(a)
void add_buffer_expectation(const PolicyParameters& params, const EncodedContext& ctx, const BufferTerm& term,
                            double weight, std::span<double> out) {
  if (weight <= 0.0) return;
  for (std::size_t i = 0; i < term.queries.size(); ++i) {
    const double scale = weight * std::exp(term.logprobs[i]) * term.queries[i]->reward;
    if (scale != 0.0) accumulate_query_gradient(params, ctx, term.queries[i]->query, scale, out);
  }
}

// Draws up to 10 N samples from pi, rejects those whose query `excluded`
// reports, keeps the first N accepted and adds weight / N * R grad log pi for
// each. REINFORCE is the case of nothing excluded and weight 1.
template <class Excluded>
void add_outside_samples(const PolicyParameters& params, const EncodedContext& ctx, const QueryRewarder& reward,
                         double weight, int num_samples, Rng& rng, Excluded&& excluded, GradientEstimate& est) {
  if (num_samples < 1) throw ArgumentError("number of samples must be positive");
  const auto n = static_cast<std::size_t>(num_samples);
  const std::size_t max_draws = 10 * n;
  Query q;
  while (est.diagnostics.samples < n && est.diagnostics.draws < max_draws) {
    const Hypothesis h = sample_actions(params, ctx, rng, ctx.config().max_clauses);
    ++est.diagnostics.draws;
    const double r = reward.of_actions(h.actions, ctx, &q);
    if (excluded(q)) continue;
    ++est.diagnostics.samples;
    if (r > 0.0) {
      est.discoveries.push_back({q, r});
      accumulate_logprob_gradient(params, ctx, h.actions, weight * r / static_cast<double>(n), est.gradient);
    }
  }
  est.diagnostics.shortfall = n - est.diagnostics.samples;
}

GradientEstimate beam_estimate(const PolicyParameters& params, const EncodedContext& ctx,
                               const QueryRewarder& reward, int beam_width, double epsilon, Rng* rng) {
  GradientEstimate est;
  est.gradient.assign(params.dim(), 0.0);
  Query q;
  for (const auto& h : beam_actions(params, ctx, beam_width, epsilon, rng)) {
    const double r = reward.of_actions(h.actions, ctx, &q);
    ++est.diagnostics.samples;
    if (r <= 0.0) continue;
    est.discoveries.push_back({q, r});
    accumulate_logprob_gradient(params, ctx, h.actions, r * std::exp(h.logprob), est.gradient);
  }
  return est;
}

}  // namespace

GradientEstimate reinforce_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                    const QueryRewarder& reward, int num_samples, Rng& rng) {
  GradientEstimate est;
  est.gradient.assign(params.dim(), 0.0);
  add_outside_samples(params, ctx, reward, 1.0, num_samples, rng, [](const Query&) { return false; }, est);
  return est;
}

GradientEstimate bs_reinforce_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                       const QueryRewarder& reward, int beam_width) {
  return beam_estimate(params, ctx, reward, beam_width, 0.0, nullptr);
}

GradientEstimate rbs_reinforce_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                        const QueryRewarder& reward, int beam_width, double epsilon, Rng& rng) {
  return beam_estimate(params, ctx, reward, beam_width, epsilon, &rng);
}

GradientEstimate mapo_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                               const QueryRewarder& reward, const QueryBuffer& buffer, double alpha,
                               int num_samples, Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
  GradientEstimate est;
  est.gradient.assign(params.dim(), 0.0);
  const BufferTerm term = buffer_term(params, ctx, buffer);
  const double clipped = term.queries.empty() ? 0.0 : std::max(term.mass, alpha);
  est.diagnostics.pi_bh = term.mass;
  est.diagnostics.pi_c_bh = clipped;
  add_buffer_expectation(params, ctx, term, clipped, est.gradient);
  add_outside_samples(params, ctx, reward, 1.0 - clipped, num_samples, rng,
                      [&](const Query& q) { return buffer.contains(q); }, est);
  return est;
}

GradientEstimate mbmapo_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                 const QueryRewarder& reward, const BufferPair& buffers, double alpha_h,
                                 double alpha_o, int num_samples, Rng& rng) {
  GradientEstimate est;
  est.gradient.assign(params.dim(), 0.0);
  const BufferTerm high = buffer_term(params, ctx, buffers.high);
  const BufferTerm other = buffer_term(params, ctx, buffers.other);
  const double mass_o = std::min(other.mass, 1.0 - high.mass);
  auto [ch, co] = clip_buffer_probs(high.mass, std::max(mass_o, 0.0), alpha_h, alpha_o);
  if (high.queries.empty()) ch = 0.0;
  if (other.queries.empty()) co = 0.0;
  est.diagnostics.pi_bh = high.mass;
  est.diagnostics.pi_bo = other.mass;
  est.diagnostics.pi_c_bh = ch;
  est.diagnostics.pi_c_bo = co;
  add_buffer_expectation(params, ctx, high, ch, est.gradient);
  add_buffer_expectation(params, ctx, other, co, est.gradient);
  add_outside_samples(params, ctx, reward, std::max(0.0, 1.0 - ch - co), num_samples, rng,
                      [&](const Query& q) { return buffers.contains(q); }, est);
  return est;
}

GradientVector sl_loss_gradient(const PolicyParameters& params, const EncodedContext& ctx, const Query& gold) {
  const Query c = canonicalize(gold);
  const auto orderings = query_orderings(c, ctx);
  if (orderings.empty()) throw StateError("gold query '" + to_text(c) + "' cannot be produced in this context");
  GradientVector g(params.dim(), 0.0);
  // query_orderings lists the canonical clause order first.
  accumulate_logprob_gradient(params, ctx, orderings.front(), -1.0, g);
  return g;
}

GradientEstimate sl_rl_gradient(const PolicyParameters& params, const EncodedContext& ctx, const Query& gold,
                                const QueryRewarder& reward, const BufferPair& buffers, double alpha_h,
                                double alpha_o, double lambda, int num_samples, Rng& rng) {
  if (lambda < 0.0) throw ArgumentError("lambda must be non-negative");
  GradientEstimate est = mbmapo_gradient(params, ctx, reward, buffers, alpha_h, alpha_o, num_samples, rng);
  const GradientVector sl = sl_loss_gradient(params, ctx, gold);
  for (std::size_t i = 0; i < sl.size(); ++i) est.gradient[i] = sl[i] - lambda * est.gradient[i];
  return est;
}

}  // namespace kbq
