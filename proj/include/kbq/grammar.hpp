#pragma once

// Query grammar automaton over the per-context action vocabulary.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kbq/dialog.hpp"
#include "kbq/kb.hpp"

namespace kbq {

enum class ActionKind : std::uint8_t { Keyword, Field, Copy, Eoq };

enum class Keyword : std::uint8_t { Select, Star, From, Table, Where, Equals, And };

struct Action {
  ActionKind kind = ActionKind::Eoq;
  std::uint32_t index = 0;

  bool operator==(const Action&) const = default;
};

/// Keywords, KB field names, copyable context tokens and <eoq>.
class ActionVocabulary {
 public:
  ActionVocabulary(const DialogContext& context, const KnowledgeBase& kb);

  const std::string& token(Action a) const;
  std::size_t num_fields() const { return fields_.size(); }
  const std::vector<std::string>& context_tokens() const { return copies_; }
  const std::vector<std::string>& fields() const { return fields_; }

  /// Fields sorted by name; copies are stored sorted already.
  std::span<const std::uint32_t> fields_by_name() const { return field_order_; }

  /// Maps a token to the action it denotes in the given slot.
  /// Returns false if the token is not in the vocabulary for that slot.
  bool lookup_field(const std::string& tok, std::uint32_t& field) const;
  bool lookup_copy(const std::string& tok, std::uint32_t& copy) const;

 private:
  std::vector<std::string> fields_;
  std::vector<std::uint32_t> field_order_;
  std::vector<std::string> copies_;
};

enum class GrammarStep : std::uint8_t {
  Start,
  AfterSelect,
  AfterStar,
  AfterFrom,
  AfterTable,
  ExpectField,
  ExpectEquals,
  ExpectValue,
  AfterClause,
  Done,
};

inline constexpr int kNumGrammarSteps = 10;

struct GrammarState {
  GrammarStep step = GrammarStep::Start;
  FieldMask constrained = 0;
  int clauses = 0;
  int clause_limit = 0;
  std::uint32_t pending_field = 0;

  bool terminal() const { return step == GrammarStep::Done; }
};

GrammarState initial_state(int clause_limit);

/// Grammar-permitted actions at `gs`, ordered by token text. Empty iff terminal.
std::vector<Action> valid_actions(const GrammarState& gs, const ActionVocabulary& vocab);
void valid_actions_into(const GrammarState& gs, const ActionVocabulary& vocab, std::vector<Action>& out);

/// Throws StateError if `a` is not valid at `gs`.
GrammarState advance(const GrammarState& gs, Action a, const ActionVocabulary& vocab);

/// As advance, for actions already drawn from valid_actions.
GrammarState advance_unchecked(const GrammarState& gs, Action a);

/// Maps tokens to actions, following the grammar from the initial state.
/// Throws StateError if some token is not a valid action where it occurs.
std::vector<Action> to_actions(std::span<const std::string> tokens, const ActionVocabulary& vocab,
                               int clause_limit);

std::vector<std::string> to_tokens(std::span<const Action> actions, const ActionVocabulary& vocab);

}  // namespace kbq
