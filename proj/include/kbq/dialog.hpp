#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kbq/kb.hpp"

namespace kbq {

using Utterance = std::vector<std::string>;

struct Turn {
  Utterance user;
  Utterance system;
};

struct Dialog {
  std::vector<Turn> turns;
  std::optional<Query> gold_query;
  /// 1-based turn index at which the KB query is fired.
  std::optional<int> gold_position;
  /// Heuristic query turn written by label-positions.
  std::optional<int> heuristic_position;

  int num_turns() const { return static_cast<int>(turns.size()); }
};

/// The prefix {c_1^u, c_1^s, ..., c_q^u} of a dialog (2q-1 utterances).
struct DialogContext {
  std::vector<Utterance> utterances;
  int query_turn = 0;
};

/// Throws ArgumentError when q is outside [1, m].
DialogContext make_context(const Dialog& dialog, int q);

Dialog dialog_from_json(const nlohmann::json& obj);
nlohmann::json dialog_to_json(const Dialog& dialog);

/// Throws LoadError naming the offending dialog index.
std::vector<Dialog> corpus_from_json(const nlohmann::json& doc);
std::vector<Dialog> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<Dialog>& corpus, const std::filesystem::path& path);

/// KB values matching a token, or a run of tokens joined by '_'.
EntitySet link_entities(const Utterance& utterance, const KnowledgeBase& kb);

/// Entities mentioned from c_q^s through the end of the dialog.
EntitySet subsequent_entities(const Dialog& dialog, int q, const KnowledgeBase& kb);

/// First turn whose system utterance mentions an entity not linked in any
/// earlier utterance.
std::optional<int> heuristic_position(const Dialog& dialog, const KnowledgeBase& kb);

}  // namespace kbq
