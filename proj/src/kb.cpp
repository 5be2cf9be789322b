#include "kbq/kb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "kbq/errors.hpp"

namespace kbq {

namespace {

std::uint64_t posting_key(std::size_t field, ValueId v) {
  return (static_cast<std::uint64_t>(field) << 32) | v;
}

}  // namespace

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_gap = false;
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_gap = !out.empty();
      continue;
    }
    if (pending_gap) {
      out.push_back('_');
      pending_gap = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(normalize(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

KnowledgeBase::KnowledgeBase(std::vector<std::string> fields,
                             std::vector<std::vector<std::string>> rows)
    : fields_(std::move(fields)) {
  if (fields_.empty()) throw SchemaError("knowledge base has no fields");
  if (fields_.size() > kMaxFields) throw SchemaError("knowledge base has more than 64 fields");
  if (rows.empty()) throw SchemaError("knowledge base has no rows");
  {
    std::set<std::string> seen;
    for (const auto& f : fields_) {
      if (f.empty()) throw SchemaError("empty field name");
      if (!seen.insert(f).second) throw SchemaError("duplicate field name: " + f);
    }
  }
  cells_.reserve(rows.size() * fields_.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != fields_.size()) {
      throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                        " cells, expected " + std::to_string(fields_.size()));
    }
    for (std::size_t f = 0; f < fields_.size(); ++f) {
      std::string v = normalize(rows[r][f]);
      auto [it, inserted] = value_ids_.try_emplace(v, static_cast<ValueId>(values_.size()));
      if (inserted) {
        values_.push_back(v);
        value_fields_.push_back(0);
        std::size_t pieces = 1 + static_cast<std::size_t>(std::count(v.begin(), v.end(), '_'));
        max_span_ = std::max(max_span_, pieces);
      }
      ValueId id = it->second;
      value_fields_[id] |= FieldMask{1} << f;
      cells_.push_back(id);
      postings_[posting_key(f, id)].push_back(static_cast<std::uint32_t>(r));
    }
  }
}

KnowledgeBase KnowledgeBase::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_array()) throw LoadError("knowledge base JSON must be an array of objects");
  if (doc.empty()) throw LoadError("knowledge base JSON is empty");
  std::vector<std::string> fields;
  if (!doc[0].is_object()) throw LoadError("knowledge base row 0 is not an object");
  for (const auto& [k, _] : doc[0].items()) fields.push_back(k);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(doc.size());
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    if (!obj.is_object()) throw LoadError("knowledge base row " + std::to_string(r) + " is not an object");
    if (obj.size() != fields.size()) {
      throw LoadError("knowledge base row " + std::to_string(r) + " does not match the schema");
    }
    std::vector<std::string> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      auto it = obj.find(f);
      if (it == obj.end() || !it->is_string()) {
        throw LoadError("knowledge base row " + std::to_string(r) + " lacks string field '" + f + "'");
      }
      row.push_back(it->get<std::string>());
    }
    rows.push_back(std::move(row));
  }
  try {
    return KnowledgeBase(std::move(fields), std::move(rows));
  } catch (const SchemaError& e) {
    throw LoadError(e.what());
  }
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open knowledge base file " + path.string());
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed knowledge base JSON in " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::ordered_json KnowledgeBase::to_json() const {
  auto doc = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < num_rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (std::size_t f = 0; f < fields_.size(); ++f) row[fields_[f]] = cell(r, f);
    doc.push_back(std::move(row));
  }
  return doc;
}

int KnowledgeBase::field_index(std::string_view name) const {
  for (std::size_t f = 0; f < fields_.size(); ++f) {
    if (fields_[f] == name) return static_cast<int>(f);
  }
  return -1;
}

std::size_t KnowledgeBase::require_field(std::string_view name) const {
  int f = field_index(name);
  if (f < 0) throw SchemaError("unknown field: " + std::string(name));
  return static_cast<std::size_t>(f);
}

std::int64_t KnowledgeBase::value_id(std::string_view v) const {
  auto it = value_ids_.find(std::string(v));
  return it == value_ids_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

FieldMask KnowledgeBase::fields_of_value(std::string_view v) const {
  auto id = value_id(v);
  return id < 0 ? 0 : value_fields_[static_cast<std::size_t>(id)];
}

std::span<const std::uint32_t> KnowledgeBase::rows_with(std::size_t field, std::string_view v) const {
  auto id = value_id(v);
  if (id < 0) return {};
  auto it = postings_.find(posting_key(field, static_cast<ValueId>(id)));
  if (it == postings_.end()) return {};
  return it->second;
}

EntitySet ResultSet::entities(const KnowledgeBase& kb) const {
  EntitySet out;
  for (ValueId id : entity_ids) out.insert(kb.value(id));
  return out;
}

void validate(const Query& query, const KnowledgeBase& kb) {
  FieldMask seen = 0;
  for (const auto& c : query.clauses) {
    std::size_t f = kb.require_field(c.field);
    FieldMask bit = FieldMask{1} << f;
    if (seen & bit) throw ValidationError("field constrained twice: " + c.field);
    seen |= bit;
  }
}

ResultSet execute(const Query& query, const KnowledgeBase& kb) {
  validate(query, kb);
  ResultSet out;
  if (query.clauses.empty()) {
    out.rows.resize(kb.num_rows());
    for (std::size_t r = 0; r < kb.num_rows(); ++r) out.rows[r] = static_cast<std::uint32_t>(r);
  } else {
    // Intersect postings, shortest first.
    std::vector<std::span<const std::uint32_t>> lists;
    lists.reserve(query.clauses.size());
    for (const auto& c : query.clauses) lists.push_back(kb.rows_with(kb.require_field(c.field), c.value));
    std::sort(lists.begin(), lists.end(), [](auto a, auto b) { return a.size() < b.size(); });
    out.rows.assign(lists[0].begin(), lists[0].end());
    for (std::size_t i = 1; i < lists.size() && !out.rows.empty(); ++i) {
      std::vector<std::uint32_t> next;
      std::set_intersection(out.rows.begin(), out.rows.end(), lists[i].begin(), lists[i].end(),
                            std::back_inserter(next));
      out.rows.swap(next);
    }
  }
  out.entity_ids.reserve(out.rows.size() * kb.num_fields());
  for (auto r : out.rows) {
    for (std::size_t f = 0; f < kb.num_fields(); ++f) out.entity_ids.push_back(kb.cell_id(r, f));
  }
  std::sort(out.entity_ids.begin(), out.entity_ids.end());
  out.entity_ids.erase(std::unique(out.entity_ids.begin(), out.entity_ids.end()), out.entity_ids.end());
  return out;
}

Query canonicalize(Query query) {
  std::sort(query.clauses.begin(), query.clauses.end());
  return query;
}

Query parse_query(std::span<const std::string> toks) {
  std::size_t pos = 0;
  auto expect = [&](std::string_view want) {
    if (pos >= toks.size()) throw ParseError("expected '" + std::string(want) + "', got end of input", pos);
    if (toks[pos] != want) {
      throw ParseError("expected '" + std::string(want) + "', got '" + toks[pos] + "'", pos);
    }
    ++pos;
  };
  auto is_reserved = [](std::string_view t) {
    return t == tokens::kSelect || t == tokens::kStar || t == tokens::kFrom || t == tokens::kWhere ||
           t == tokens::kEquals || t == tokens::kAnd || t == tokens::kEoq;
  };
  auto operand = [&](const char* what) -> const std::string& {
    if (pos >= toks.size()) throw ParseError(std::string("expected ") + what + ", got end of input", pos);
    if (is_reserved(toks[pos])) {
      throw ParseError(std::string("expected ") + what + ", got keyword '" + toks[pos] + "'", pos);
    }
    return toks[pos++];
  };

  expect(tokens::kSelect);
  expect(tokens::kStar);
  expect(tokens::kFrom);
  expect(tokens::kTable);
  Query q;
  if (pos < toks.size() && toks[pos] == tokens::kWhere) {
    ++pos;
    while (true) {
      std::size_t clause_pos = pos;
      Clause c;
      c.field = operand("field name");
      expect(tokens::kEquals);
      c.value = operand("value");
      for (const auto& prev : q.clauses) {
        if (prev.field == c.field) throw ValidationError("field constrained twice: " + c.field +
                                                         " (at token " + std::to_string(clause_pos) + ")");
      }
      q.clauses.push_back(std::move(c));
      if (pos < toks.size() && toks[pos] == tokens::kAnd) {
        ++pos;
        continue;
      }
      break;
    }
  }
  expect(tokens::kEoq);
  if (pos != toks.size()) throw ParseError("trailing tokens after <eoq>", pos);
  return q;
}

Query parse_query(std::string_view text) {
  // Keywords are case sensitive, so split without normalizing.
  std::vector<std::string> toks;
  std::istringstream in{std::string(text)};
  for (std::string t; in >> t;) toks.push_back(t);
  return parse_query(std::span<const std::string>(toks));
}

std::vector<std::string> serialize(const Query& query) {
  Query c = canonicalize(query);
  std::vector<std::string> out{std::string(tokens::kSelect), std::string(tokens::kStar),
                               std::string(tokens::kFrom), std::string(tokens::kTable)};
  for (std::size_t i = 0; i < c.clauses.size(); ++i) {
    out.emplace_back(i == 0 ? tokens::kWhere : tokens::kAnd);
    out.push_back(c.clauses[i].field);
    out.emplace_back(tokens::kEquals);
    out.push_back(c.clauses[i].value);
  }
  out.emplace_back(tokens::kEoq);
  return out;
}

std::string to_text(const Query& query) {
  std::string out;
  for (const auto& t : serialize(query)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace kbq
