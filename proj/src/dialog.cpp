#include "kbq/dialog.hpp"

#include <fstream>

#include "kbq/errors.hpp"

namespace kbq {

namespace {

std::string join(const Utterance& u) {
  std::string out;
  for (const auto& t : u) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

DialogContext make_context(const Dialog& dialog, int q) {
  if (q < 1 || q > dialog.num_turns()) {
    throw ArgumentError("query turn " + std::to_string(q) + " outside [1, " +
                        std::to_string(dialog.num_turns()) + "]");
  }
  DialogContext ctx;
  ctx.query_turn = q;
  ctx.utterances.reserve(static_cast<std::size_t>(2 * q - 1));
  for (int i = 0; i < q; ++i) {
    ctx.utterances.push_back(dialog.turns[static_cast<std::size_t>(i)].user);
    if (i + 1 < q) ctx.utterances.push_back(dialog.turns[static_cast<std::size_t>(i)].system);
  }
  return ctx;
}

Dialog dialog_from_json(const nlohmann::json& obj) {
  if (!obj.is_object()) throw LoadError("dialog is not an object");
  auto it = obj.find("turns");
  if (it == obj.end() || !it->is_array()) throw LoadError("dialog lacks a 'turns' array");
  if (it->empty()) throw LoadError("dialog has no turns");
  Dialog d;
  for (std::size_t t = 0; t < it->size(); ++t) {
    const auto& turn = (*it)[t];
    if (!turn.is_object()) throw LoadError("turn " + std::to_string(t + 1) + " is not an object");
    auto u = turn.find("user");
    auto s = turn.find("system");
    if (u == turn.end() || !u->is_string()) throw LoadError("turn " + std::to_string(t + 1) + " lacks a user utterance");
    if (s == turn.end() || !s->is_string()) {
      throw LoadError("turn " + std::to_string(t + 1) + " lacks a system utterance");
    }
    d.turns.push_back({tokenize(u->get<std::string>()), tokenize(s->get<std::string>())});
  }
  if (auto g = obj.find("gold_query"); g != obj.end() && !g->is_null()) {
    if (!g->is_string()) throw LoadError("gold_query must be a string");
    try {
      d.gold_query = parse_query(g->get<std::string>());
    } catch (const Error& e) {
      throw LoadError(std::string("gold_query: ") + e.what());
    }
  }
  if (auto p = obj.find("gold_position"); p != obj.end() && !p->is_null()) {
    if (!p->is_number_integer()) throw LoadError("gold_position must be an integer");
    int q = p->get<int>();
    if (q < 1 || q > d.num_turns()) throw LoadError("gold_position " + std::to_string(q) + " out of range");
    d.gold_position = q;
  }
  if (auto p = obj.find("heuristic_position"); p != obj.end() && !p->is_null()) {
    if (!p->is_number_integer()) throw LoadError("heuristic_position must be an integer");
    int q = p->get<int>();
    if (q < 1 || q > d.num_turns()) throw LoadError("heuristic_position " + std::to_string(q) + " out of range");
    d.heuristic_position = q;
  }
  return d;
}

nlohmann::json dialog_to_json(const Dialog& dialog) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : dialog.turns) turns.push_back({{"user", join(t.user)}, {"system", join(t.system)}});
  nlohmann::json obj = {{"turns", std::move(turns)}};
  if (dialog.gold_query) obj["gold_query"] = to_text(*dialog.gold_query);
  if (dialog.gold_position) obj["gold_position"] = *dialog.gold_position;
  if (dialog.heuristic_position) obj["heuristic_position"] = *dialog.heuristic_position;
  return obj;
}

std::vector<Dialog> corpus_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw LoadError("corpus JSON must be an array of dialogs");
  std::vector<Dialog> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(dialog_from_json(doc[i]));
    } catch (const LoadError& e) {
      throw LoadError("dialog " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Dialog> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open corpus file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed corpus JSON in " + path.string() + ": " + e.what());
  }
  return corpus_from_json(doc);
}

void save_corpus(const std::vector<Dialog>& corpus, const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& d : corpus) doc.push_back(dialog_to_json(d));
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path.string());
  out << doc.dump(1) << '\n';
}

EntitySet link_entities(const Utterance& utterance, const KnowledgeBase& kb) {
  EntitySet out;
  const std::size_t max_span = kb.max_value_span();
  for (std::size_t i = 0; i < utterance.size(); ++i) {
    std::string span;
    for (std::size_t len = 1; len <= max_span && i + len <= utterance.size(); ++len) {
      if (len > 1) span.push_back('_');
      span += utterance[i + len - 1];
      if (kb.value_id(span) >= 0) out.insert(span);
    }
  }
  return out;
}

EntitySet subsequent_entities(const Dialog& dialog, int q, const KnowledgeBase& kb) {
  if (q < 1 || q > dialog.num_turns()) {
    throw ArgumentError("query turn " + std::to_string(q) + " outside [1, " +
                        std::to_string(dialog.num_turns()) + "]");
  }
  EntitySet out;
  for (int i = q - 1; i < dialog.num_turns(); ++i) {
    const auto& turn = dialog.turns[static_cast<std::size_t>(i)];
    if (i > q - 1) out.merge(link_entities(turn.user, kb));
    out.merge(link_entities(turn.system, kb));
  }
  return out;
}

std::optional<int> heuristic_position(const Dialog& dialog, const KnowledgeBase& kb) {
  EntitySet seen;
  for (int i = 0; i < dialog.num_turns(); ++i) {
    const auto& turn = dialog.turns[static_cast<std::size_t>(i)];
    seen.merge(link_entities(turn.user, kb));
    EntitySet sys = link_entities(turn.system, kb);
    for (const auto& e : sys) {
      if (!seen.contains(e)) return i + 1;
    }
    seen.merge(sys);
  }
  return std::nullopt;
}

}  // namespace kbq
