#pragma once

// Tabular knowledge base, the conjunctive equality query language over it,
// and query denotation.
//
// Query text grammar (space separated tokens):
//
//   SELECT * FROM kb [WHERE f = v (AND f = v)*] <eoq>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace kbq {

using ValueId = std::uint32_t;
using FieldMask = std::uint64_t;
using EntitySet = std::set<std::string>;

inline constexpr std::size_t kMaxFields = 64;

namespace tokens {
inline constexpr std::string_view kSelect = "SELECT";
inline constexpr std::string_view kStar = "*";
inline constexpr std::string_view kFrom = "FROM";
inline constexpr std::string_view kTable = "kb";
inline constexpr std::string_view kWhere = "WHERE";
inline constexpr std::string_view kEquals = "=";
inline constexpr std::string_view kAnd = "AND";
inline constexpr std::string_view kEoq = "<eoq>";
}  // namespace tokens

/// Lowercase, trim, and collapse internal whitespace runs to a single '_'.
std::string normalize(std::string_view raw);

/// Splits on whitespace; tokens are normalized.
std::vector<std::string> tokenize(std::string_view text);

struct Clause {
  std::string field;
  std::string value;

  auto operator<=>(const Clause&) const = default;
  bool operator==(const Clause&) const = default;
};

struct Query {
  std::vector<Clause> clauses;

  bool operator==(const Query&) const = default;
};

class KnowledgeBase {
 public:
  KnowledgeBase(std::vector<std::string> fields, std::vector<std::vector<std::string>> rows);

  /// Flat string-valued objects; the schema comes from the first object.
  static KnowledgeBase from_json(const nlohmann::ordered_json& doc);
  static KnowledgeBase load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;

  const std::vector<std::string>& fields() const { return fields_; }
  std::size_t num_fields() const { return fields_.size(); }
  std::size_t num_rows() const { return cells_.size() / fields_.size(); }

  const std::string& cell(std::size_t row, std::size_t field) const {
    return values_[cells_[row * fields_.size() + field]];
  }
  ValueId cell_id(std::size_t row, std::size_t field) const {
    return cells_[row * fields_.size() + field];
  }

  /// Index of a field, or -1.
  int field_index(std::string_view name) const;
  std::size_t require_field(std::string_view name) const;

  /// Interned distinct cell values.
  std::size_t num_values() const { return values_.size(); }
  const std::string& value(ValueId id) const { return values_[id]; }
  /// Id of a cell value, or -1 if it never occurs.
  std::int64_t value_id(std::string_view v) const;

  /// Bitmask of the fields in which `v` occurs.
  FieldMask fields_of_value(std::string_view v) const;

  /// Sorted row indices where field `f` holds `v`.
  std::span<const std::uint32_t> rows_with(std::size_t field, std::string_view v) const;

  /// Longest value measured in '_' separated pieces; bounds span linking.
  std::size_t max_value_span() const { return max_span_; }

 private:
  std::vector<std::string> fields_;
  std::vector<ValueId> cells_;
  std::vector<std::string> values_;
  std::unordered_map<std::string, ValueId> value_ids_;
  std::vector<FieldMask> value_fields_;
  // (field, value id) -> rows
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> postings_;
  std::size_t max_span_ = 1;
};

struct ResultSet {
  std::vector<std::uint32_t> rows;
  /// Distinct value ids over all fields of the returned rows, sorted.
  std::vector<ValueId> entity_ids;

  EntitySet entities(const KnowledgeBase& kb) const;
};

/// Throws SchemaError if a clause names a field missing from the KB, and
/// ValidationError if a field is constrained twice.
void validate(const Query& query, const KnowledgeBase& kb);

ResultSet execute(const Query& query, const KnowledgeBase& kb);

Query canonicalize(Query query);

/// Returns the query iff `tokens` is grammatical; the table token must be `kb`.
Query parse_query(std::span<const std::string> tokens);
Query parse_query(std::string_view text);

/// Canonical clause order, terminated by <eoq>.
std::vector<std::string> serialize(const Query& query);
std::string to_text(const Query& query);

}  // namespace kbq
