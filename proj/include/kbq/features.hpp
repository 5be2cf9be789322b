#pragma once

// Hashed feature templates for the log-linear query policy.
//
// A decoding step is scored from (context summary, decoded prefix, candidate
// action). Templates:
//   state x action          grammar step id crossed with the action
//   bigram                  previous action crossed with the action
//   bag-of-words x action   every distinct context word crossed with the action
//   eoq length              clause count (real valued and one-hot) on <eoq>
//   grounding               whether a field has an unused value in the context,
//                           whether a copied token is a KB value of the field
//                           being filled, and how many grounded fields remain
//                           unconstrained at AND / WHERE / <eoq> decisions

#include <bit>
#include <cstdint>
#include <string_view>
#include <vector>

#include "kbq/dialog.hpp"
#include "kbq/grammar.hpp"
#include "kbq/kb.hpp"
#include "kbq/rng.hpp"

namespace kbq {

inline constexpr std::string_view kFeatureTemplateVersion = "kbq-features-v1";

struct PolicyConfig {
  int hash_bits = 16;
  int max_clauses = 4;

  std::size_t dim() const { return std::size_t{1} << hash_bits; }
  /// Token budget before <eoq>: SELECT * FROM kb plus four tokens per clause.
  int max_len() const { return 4 + 4 * max_clauses; }
};

std::uint64_t hash_token(std::string_view s);

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x2545f4914f6cdd1dULL));
}

/// Fingerprint of the feature template and the schema it is instantiated on.
std::uint64_t feature_template_hash(const KnowledgeBase& kb, const PolicyConfig& config);

/// Per-context precomputation shared by every policy operation.
class EncodedContext {
 public:
  EncodedContext(const DialogContext& context, const KnowledgeBase& kb, const PolicyConfig& config);

  const ActionVocabulary& vocab() const { return vocab_; }
  const PolicyConfig& config() const { return config_; }
  FieldMask grounded() const { return grounded_; }
  std::uint64_t action_key(Action a) const;
  GrammarState initial() const { return initial_state(config_.max_clauses); }

  /// Calls fn(index, value) for each active feature of `a` taken at `gs`
  /// after `prev`.
  template <class Fn>
  void visit(const GrammarState& gs, Action prev, Action a, Fn&& fn) const;

 private:
  ActionVocabulary vocab_;
  PolicyConfig config_;
  int shift_;
  std::vector<std::uint64_t> bow_;
  std::vector<std::uint64_t> field_key_;
  std::vector<std::uint64_t> copy_key_;
  std::vector<FieldMask> copy_fields_;
  FieldMask grounded_ = 0;

  std::uint32_t index(std::uint64_t h) const { return static_cast<std::uint32_t>(h >> shift_); }
};

namespace feature_tags {
inline constexpr std::uint64_t kState = 0x51;
inline constexpr std::uint64_t kBigram = 0x52;
inline constexpr std::uint64_t kBow = 0x53;
inline constexpr std::uint64_t kEoqLen = 0x54;
inline constexpr std::uint64_t kEoqCount = 0x55;
inline constexpr std::uint64_t kFieldGrounded = 0x56;
inline constexpr std::uint64_t kFieldGroundedAny = 0x57;
inline constexpr std::uint64_t kFieldUngrounded = 0x58;
inline constexpr std::uint64_t kValueOfField = 0x59;
inline constexpr std::uint64_t kValueOfFieldAny = 0x5a;
inline constexpr std::uint64_t kValueOtherField = 0x5b;
inline constexpr std::uint64_t kValueNotInKb = 0x5c;
inline constexpr std::uint64_t kRemaining = 0x5d;
}  // namespace feature_tags

template <class Fn>
void EncodedContext::visit(const GrammarState& gs, Action prev, Action a, Fn&& fn) const {
  namespace t = feature_tags;
  const std::uint64_t ak = action_key(a);
  fn(index(hash_mix(hash_mix(t::kState, static_cast<std::uint64_t>(gs.step)), ak)), 1.0);
  fn(index(hash_mix(hash_mix(t::kBigram, action_key(prev)), ak)), 1.0);
  const std::uint64_t bow_base = hash_mix(t::kBow, ak);
  for (auto w : bow_) fn(index(hash_mix(bow_base, w)), 1.0);

  switch (gs.step) {
    case GrammarStep::AfterTable:
    case GrammarStep::AfterClause: {
      const int remaining = std::popcount(grounded_ & ~gs.constrained);
      fn(index(hash_mix(hash_mix(t::kRemaining, static_cast<std::uint64_t>(std::min(remaining, 3))), ak)), 1.0);
      if (a.kind == ActionKind::Eoq) {
        fn(index(hash_mix(t::kEoqLen, 0)), static_cast<double>(gs.clauses));
        fn(index(hash_mix(t::kEoqCount, static_cast<std::uint64_t>(gs.clauses))), 1.0);
      }
      break;
    }
    case GrammarStep::ExpectField: {
      const FieldMask bit = FieldMask{1} << a.index;
      if (grounded_ & bit) {
        fn(index(hash_mix(t::kFieldGrounded, field_key_[a.index])), 1.0);
        fn(index(hash_mix(t::kFieldGroundedAny, 0)), 1.0);
      } else {
        fn(index(hash_mix(t::kFieldUngrounded, 0)), 1.0);
      }
      break;
    }
    case GrammarStep::ExpectValue: {
      const FieldMask fields = copy_fields_[a.index];
      if (fields & (FieldMask{1} << gs.pending_field)) {
        fn(index(hash_mix(t::kValueOfField, field_key_[gs.pending_field])), 1.0);
        fn(index(hash_mix(t::kValueOfFieldAny, 0)), 1.0);
      } else if (fields != 0) {
        fn(index(hash_mix(t::kValueOtherField, 0)), 1.0);
      } else {
        fn(index(hash_mix(t::kValueNotInKb, 0)), 1.0);
      }
      break;
    }
    default: break;
  }
}

}  // namespace kbq
