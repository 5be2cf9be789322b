#include "kbq/grammar.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <set>

#include "kbq/errors.hpp"

namespace kbq {

namespace {

const std::array<std::string, 7> kKeywordText = {
    std::string(tokens::kSelect), std::string(tokens::kStar),  std::string(tokens::kFrom),
    std::string(tokens::kTable),  std::string(tokens::kWhere), std::string(tokens::kEquals),
    std::string(tokens::kAnd)};
const std::string kEoqText(tokens::kEoq);

bool reserved(std::string_view t) {
  return t == tokens::kSelect || t == tokens::kStar || t == tokens::kFrom || t == tokens::kWhere ||
         t == tokens::kEquals || t == tokens::kAnd || t == tokens::kEoq;
}

constexpr Action kw(Keyword k) { return {ActionKind::Keyword, static_cast<std::uint32_t>(k)}; }
constexpr Action kEoqAction{ActionKind::Eoq, 0};

}  // namespace

ActionVocabulary::ActionVocabulary(const DialogContext& context, const KnowledgeBase& kb)
    : fields_(kb.fields()) {
  field_order_.resize(fields_.size());
  for (std::uint32_t i = 0; i < field_order_.size(); ++i) field_order_[i] = i;
  std::sort(field_order_.begin(), field_order_.end(),
            [&](auto a, auto b) { return fields_[a] < fields_[b]; });

  std::set<std::string> copies;
  for (const auto& u : context.utterances) {
    for (const auto& t : u) {
      if (!t.empty() && !reserved(t)) copies.insert(t);
    }
    // Multi-token KB values are copied as one action.
    for (const auto& e : link_entities(u, kb)) copies.insert(e);
  }
  copies_.assign(copies.begin(), copies.end());
}

const std::string& ActionVocabulary::token(Action a) const {
  switch (a.kind) {
    case ActionKind::Keyword: return kKeywordText[a.index];
    case ActionKind::Field: return fields_[a.index];
    case ActionKind::Copy: return copies_[a.index];
    case ActionKind::Eoq: return kEoqText;
  }
  return kEoqText;
}

bool ActionVocabulary::lookup_field(const std::string& tok, std::uint32_t& field) const {
  for (std::uint32_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i] == tok) {
      field = i;
      return true;
    }
  }
  return false;
}

bool ActionVocabulary::lookup_copy(const std::string& tok, std::uint32_t& copy) const {
  auto it = std::lower_bound(copies_.begin(), copies_.end(), tok);
  if (it == copies_.end() || *it != tok) return false;
  copy = static_cast<std::uint32_t>(it - copies_.begin());
  return true;
}

GrammarState initial_state(int clause_limit) {
  GrammarState gs;
  gs.clause_limit = std::max(0, clause_limit);
  return gs;
}

std::vector<Action> valid_actions(const GrammarState& gs, const ActionVocabulary& vocab) {
  std::vector<Action> out;
  valid_actions_into(gs, vocab, out);
  return out;
}

void valid_actions_into(const GrammarState& gs, const ActionVocabulary& vocab, std::vector<Action>& out) {
  out.clear();
  const FieldMask all = vocab.num_fields() >= 64 ? ~FieldMask{0} : (FieldMask{1} << vocab.num_fields()) - 1;
  const bool can_extend = gs.clauses < gs.clause_limit && (gs.constrained & all) != all &&
                          !vocab.context_tokens().empty();
  // "<eoq>" sorts before "AND" and "WHERE".
  switch (gs.step) {
    case GrammarStep::Start: out.push_back(kw(Keyword::Select)); break;
    case GrammarStep::AfterSelect: out.push_back(kw(Keyword::Star)); break;
    case GrammarStep::AfterStar: out.push_back(kw(Keyword::From)); break;
    case GrammarStep::AfterFrom: out.push_back(kw(Keyword::Table)); break;
    case GrammarStep::AfterTable:
      out.push_back(kEoqAction);
      if (can_extend) out.push_back(kw(Keyword::Where));
      break;
    case GrammarStep::AfterClause:
      out.push_back(kEoqAction);
      if (can_extend) out.push_back(kw(Keyword::And));
      break;
    case GrammarStep::ExpectField:
      for (auto f : vocab.fields_by_name()) {
        if (!(gs.constrained & (FieldMask{1} << f))) out.push_back({ActionKind::Field, f});
      }
      break;
    case GrammarStep::ExpectEquals: out.push_back(kw(Keyword::Equals)); break;
    case GrammarStep::ExpectValue:
      for (std::uint32_t i = 0; i < vocab.context_tokens().size(); ++i) out.push_back({ActionKind::Copy, i});
      break;
    case GrammarStep::Done: break;
  }
}

GrammarState advance(const GrammarState& gs, Action a, const ActionVocabulary& vocab) {
  auto valid = valid_actions(gs, vocab);
  if (std::find(valid.begin(), valid.end(), a) == valid.end()) {
    throw StateError("action '" + vocab.token(a) + "' is not grammatical here");
  }
  return advance_unchecked(gs, a);
}

GrammarState advance_unchecked(const GrammarState& gs, Action a) {
  GrammarState next = gs;
  switch (gs.step) {
    case GrammarStep::Start: next.step = GrammarStep::AfterSelect; break;
    case GrammarStep::AfterSelect: next.step = GrammarStep::AfterStar; break;
    case GrammarStep::AfterStar: next.step = GrammarStep::AfterFrom; break;
    case GrammarStep::AfterFrom: next.step = GrammarStep::AfterTable; break;
    case GrammarStep::AfterTable:
    case GrammarStep::AfterClause:
      next.step = a.kind == ActionKind::Eoq ? GrammarStep::Done : GrammarStep::ExpectField;
      break;
    case GrammarStep::ExpectField:
      next.step = GrammarStep::ExpectEquals;
      next.pending_field = a.index;
      break;
    case GrammarStep::ExpectEquals: next.step = GrammarStep::ExpectValue; break;
    case GrammarStep::ExpectValue:
      next.step = GrammarStep::AfterClause;
      next.constrained |= FieldMask{1} << gs.pending_field;
      next.clauses += 1;
      break;
    case GrammarStep::Done: break;
  }
  return next;
}

std::vector<Action> to_actions(std::span<const std::string> toks, const ActionVocabulary& vocab,
                               int clause_limit) {
  std::vector<Action> out;
  out.reserve(toks.size());
  GrammarState gs = initial_state(clause_limit);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (gs.terminal()) throw StateError("tokens after <eoq> at position " + std::to_string(i));
    const auto& t = toks[i];
    Action a;
    std::uint32_t idx = 0;
    if (gs.step == GrammarStep::ExpectField) {
      if (!vocab.lookup_field(t, idx)) throw StateError("unknown field '" + t + "' at position " + std::to_string(i));
      a = {ActionKind::Field, idx};
    } else if (gs.step == GrammarStep::ExpectValue) {
      if (!vocab.lookup_copy(t, idx)) {
        throw StateError("value '" + t + "' at position " + std::to_string(i) + " is not a context token");
      }
      a = {ActionKind::Copy, idx};
    } else if (t == kEoqText) {
      a = kEoqAction;
    } else {
      auto it = std::find(kKeywordText.begin(), kKeywordText.end(), t);
      if (it == kKeywordText.end()) throw StateError("unexpected token '" + t + "' at position " + std::to_string(i));
      a = {ActionKind::Keyword, static_cast<std::uint32_t>(it - kKeywordText.begin())};
    }
    try {
      gs = advance(gs, a, vocab);
    } catch (const StateError& e) {
      throw StateError(std::string(e.what()) + " (position " + std::to_string(i) + ")");
    }
    out.push_back(a);
  }
  if (!gs.terminal()) throw StateError("token sequence is not terminated by <eoq>");
  return out;
}

std::vector<std::string> to_tokens(std::span<const Action> actions, const ActionVocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (auto a : actions) out.push_back(vocab.token(a));
  return out;
}

}  // namespace kbq
