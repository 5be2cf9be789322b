#pragma once

// Policy-gradient estimators of the expected weak reward, plus the
// supervised and hybrid losses.
//
// RL estimators return ascent directions of the expected reward.
// sl_loss_gradient and sl_rl_gradient return descent directions of a loss.

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kbq/buffers.hpp"
#include "kbq/policy.hpp"
#include "kbq/reward.hpp"
#include "kbq/rng.hpp"

namespace kbq {

/// Memoized reward of action sequences for one (context, E^s) pair.
/// Not safe for concurrent use; one instance per context.
class QueryRewarder {
 public:
  QueryRewarder(const KnowledgeBase& kb, const EntitySet& es) : rf_(kb, es) {}

  double operator()(const Query& canonical) const;
  double of_actions(std::span<const Action> actions, const EncodedContext& ctx, Query* canonical_out = nullptr) const;

 private:
  RewardFunction rf_;
  mutable std::unordered_map<std::string, double> memo_;
};

struct EstimateDiagnostics {
  double pi_bh = 0.0;    // total policy mass of B_h (or of the single MAPO buffer)
  double pi_bo = 0.0;    // total policy mass of B_o
  double pi_c_bh = 0.0;  // clipped weights actually used
  double pi_c_bo = 0.0;
  std::size_t samples = 0;   // accepted on-policy samples
  std::size_t draws = 0;     // draws including rejected ones
  std::size_t shortfall = 0; // requested minus accepted samples
};

struct GradientEstimate {
  GradientVector gradient;
  EstimateDiagnostics diagnostics;
  /// Positive-reward queries met while sampling, for the next buffer update.
  std::vector<ScoredQuery> discoveries;
};

/// Clipped buffer weights:
///   pi_c_bh = max(pi_bh, alpha_h)
///   pi_c_bo = min(max((1 - pi_c_bh) * alpha_o, pi_bo), 1 - pi_c_bh)
/// Throws ArgumentError outside the unit domain. Inputs summing past 1 are
/// accepted; the upper clamp still keeps the outputs within a unit budget.
std::pair<double, double> clip_buffer_probs(double pi_bh, double pi_bo, double alpha_h, double alpha_o);

GradientEstimate reinforce_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                    const QueryRewarder& reward, int num_samples, Rng& rng);

/// Sum over beam queries of R(a) * pi(a) * grad log pi(a).
GradientEstimate bs_reinforce_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                       const QueryRewarder& reward, int beam_width);

GradientEstimate rbs_reinforce_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                        const QueryRewarder& reward, int beam_width, double epsilon, Rng& rng);

/// Exact in-buffer expectation weighted by max(pi_B, alpha) plus a
/// rejection-sampled out-of-buffer term weighted by the remainder.
GradientEstimate mapo_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                               const QueryRewarder& reward, const QueryBuffer& buffer, double alpha,
                               int num_samples, Rng& rng);

/// Two exact in-buffer expectations (B_h, B_o) with clipped weights plus the
/// rejection-sampled remainder.
GradientEstimate mbmapo_gradient(const PolicyParameters& params, const EncodedContext& ctx,
                                 const QueryRewarder& reward, const BufferPair& buffers, double alpha_h,
                                 double alpha_o, int num_samples, Rng& rng);

/// Gradient of -log pi(gold) for the canonical serialization of `gold`.
GradientVector sl_loss_gradient(const PolicyParameters& params, const EncodedContext& ctx, const Query& gold);

/// Descent direction of CE - lambda * O_ER, with O_ER estimated by mB-MAPO.
GradientEstimate sl_rl_gradient(const PolicyParameters& params, const EncodedContext& ctx, const Query& gold,
                                const QueryRewarder& reward, const BufferPair& buffers, double alpha_h,
                                double alpha_o, double lambda, int num_samples, Rng& rng);

/// Total policy mass of the buffer's queries.
double buffer_probability(const PolicyParameters& params, const EncodedContext& ctx, const QueryBuffer& buffer);

}  // namespace kbq
